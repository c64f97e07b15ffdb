#pragma once

// Adam optimizer over one or more ParamStores.

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "bpmr/net/model.hpp"

namespace bpmr {

class Adam {
 public:
  explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void attach(const std::string& prefix, ParamStore& store) {
    for (auto& [name, t] : store.items()) {
      Slot& s = slots_[prefix + "/" + name];
      s.tensor = t;
      s.m.assign(static_cast<size_t>(t.size()), 0.0);
      s.v.assign(static_cast<size_t>(t.size()), 0.0);
    }
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (auto& [name, s] : slots_) {
      auto& val = s.tensor.data();
      auto& grad = s.tensor.grad();
      for (size_t i = 0; i < val.size(); ++i) {
        s.m[i] = beta1_ * s.m[i] + (1.0 - beta1_) * grad[i];
        s.v[i] = beta2_ * s.v[i] + (1.0 - beta2_) * grad[i] * grad[i];
        val[i] -= lr_ * (s.m[i] / bc1) / (std::sqrt(s.v[i] / bc2) + eps_);
      }
    }
  }

  long step_count() const { return t_; }
  double lr() const { return lr_; }

 private:
  struct Slot {
    ad::Tensor tensor;
    std::vector<double> m, v;
  };
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::map<std::string, Slot> slots_;
};

}  // namespace bpmr
