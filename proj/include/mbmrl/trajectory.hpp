#ifndef MBMRL_TRAJECTORY_HPP_
#define MBMRL_TRAJECTORY_HPP_

#include <cstddef>
#include <vector>

#include "mbmrl/attention.hpp"
#include "mbmrl/tensor.hpp"

namespace mbmrl {

struct TrajStep {
  VecD state;
  double time = 0.0;
  VecD action;      // executed (possibly clamped) action
  VecD pre_squash;  // sampling record needed to rebuild the log-prob
  double log_prob = 0.0;
  double reward = 0.0;  // raw task reward; regularization applied at use site
  AttentionMetrics metrics;
};

enum class TrajSource { kRealEnv, kModel };

struct Trajectory {
  std::vector<TrajStep> steps;
  VecD final_state;        // state after the last executed step
  double final_time = 0.0;
  TrajSource source = TrajSource::kRealEnv;
  int member_index = -1;  // which ensemble member generated it, -1 for real
  bool diverged = false;  // hit the divergence guard and was truncated

  std::size_t length() const { return steps.size(); }
};

struct TransitionRecord {
  VecD x_n;
  VecD u_n;
  VecD x_next;
  double dt_n = 0.0;
};

// bounded FIFO pool of real transitions; eviction is strictly oldest-first
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

  void push(TransitionRecord record) {
    if (records_.size() < capacity_) {
      records_.push_back(std::move(record));
    } else {
      records_[head_] = std::move(record);
      head_ = (head_ + 1) % capacity_;
    }
  }

  std::size_t size() const { return records_.size(); }
  std::size_t capacity() const { return capacity_; }

  // i = 0 is the oldest record currently held
  const TransitionRecord& at(std::size_t i) const {
    return records_[(head_ + i) % records_.size()];
  }

  void clear() {
    records_.clear();
    head_ = 0;
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // index of the oldest record once full
  std::vector<TransitionRecord> records_;
};

}  // namespace mbmrl

#endif  // MBMRL_TRAJECTORY_HPP_
