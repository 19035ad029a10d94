// Copyright 2026 The TweezerLab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>

#include <Eigen/Dense>

namespace tweezerlab {

// Adaptive-moment update (Kingma & Ba) written for ascent: `step` returns the
// increment to add to the parameters.
class Adam {
 public:
  struct Settings {
    double learning_rate = 0.1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
  };

  Adam() = default;
  Adam(Eigen::Index size, Settings settings) : settings_(settings) { reset(size); }

  void reset(Eigen::Index size) {
    m_ = Eigen::VectorXd::Zero(size);
    v_ = Eigen::VectorXd::Zero(size);
    t_ = 0;
  }

  double learning_rate() const { return settings_.learning_rate; }
  void set_learning_rate(double lr) { settings_.learning_rate = lr; }
  long iterations() const { return t_; }

  Eigen::VectorXd step(const Eigen::VectorXd& gradient) {
    ++t_;
    m_ = settings_.beta1 * m_ + (1.0 - settings_.beta1) * gradient;
    v_ = settings_.beta2 * v_ + (1.0 - settings_.beta2) * gradient.cwiseAbs2();
    const double c1 = 1.0 - std::pow(settings_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(settings_.beta2, static_cast<double>(t_));
    return settings_.learning_rate *
           ((m_ / c1).array() / ((v_ / c2).array().sqrt() + settings_.epsilon)).matrix();
  }

 private:
  Settings settings_;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  long t_ = 0;
};

}  // namespace tweezerlab
