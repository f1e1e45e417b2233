// Copyright 2026 The newsrec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef NEWSREC_COMMON_HPP
#define NEWSREC_COMMON_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace newsrec {

using Timestamp = std::int64_t;  // Unix seconds, UTC

struct RatingScale {
  double min = 1.0;
  double max = 5.0;

  bool contains(double v) const { return v >= min && v <= max; }
  double clamp(double v) const { return v < min ? min : (v > max ? max : v); }
};

// A real-valued training target: an explicit rating, a sentiment-derived
// rating, or an implicit 1/0 label.
struct RatingExample {
  std::string user_id;
  std::string item_id;
  Timestamp timestamp = 0;
  double target = 0.0;
};

// Input data is unusable (exit code 2 at the CLI).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad flags, bad config keys, bad argument values (exit code 1).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss (exit code 3).
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(int epoch, double last_finite_loss)
      : std::runtime_error("training diverged at epoch " + std::to_string(epoch) +
                           " (last finite loss " + std::to_string(last_finite_loss) + ")"),
        epoch_(epoch),
        last_finite_loss_(last_finite_loss) {}

  int epoch() const { return epoch_; }
  double last_finite_loss() const { return last_finite_loss_; }

 private:
  int epoch_;
  double last_finite_loss_;
};

}  // namespace newsrec

#endif  // NEWSREC_COMMON_HPP
