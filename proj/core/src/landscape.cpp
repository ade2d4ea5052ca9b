#include "galab/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "galab/error.hpp"

namespace galab {

QLandscape QLandscape::uniform(std::vector<double> q) {
  QLandscape out;
  out.measure.assign(q.size(), 1.0);
  out.action_volume = static_cast<double>(q.size());
  out.q = std::move(q);
  return out;
}

QLandscape QLandscape::weighted(std::vector<double> q, std::vector<double> measure) {
  QLandscape out;
  out.q = std::move(q);
  out.measure = std::move(measure);
  out.action_volume = out.total_measure();
  return out;
}

double QLandscape::total_measure() const {
  long double s = 0.0L;
  for (double m : measure) s += m;
  return static_cast<double>(s);
}

double QLandscape::max_q() const {
  if (q.empty()) throw Error(ErrorCode::EmptyLandscape, "landscape has no entries");
  return *std::max_element(q.begin(), q.end());
}

double QLandscape::min_q() const {
  if (q.empty()) throw Error(ErrorCode::EmptyLandscape, "landscape has no entries");
  return *std::min_element(q.begin(), q.end());
}

double QLandscape::mean_q() const {
  if (q.empty()) throw Error(ErrorCode::EmptyLandscape, "landscape has no entries");
  long double num = 0.0L, den = 0.0L;
  for (std::size_t i = 0; i < q.size(); ++i) {
    num += static_cast<long double>(q[i]) * measure[i];
    den += measure[i];
  }
  return static_cast<double>(num / den);
}

void QLandscape::validate() const {
  if (q.empty()) throw Error(ErrorCode::EmptyLandscape, "landscape has no entries");
  if (measure.size() != q.size()) {
    throw Error(ErrorCode::InvalidArgument,
                "measure has " + std::to_string(measure.size()) + " entries, q has " +
                    std::to_string(q.size()));
  }
  if (!actions.empty() && actions.size() != q.size()) {
    throw Error(ErrorCode::InvalidArgument, "actions and q differ in length");
  }
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!std::isfinite(q[i])) {
      throw Error(ErrorCode::NonFiniteInput, "q[" + std::to_string(i) + "] is not finite");
    }
    if (!(measure[i] > 0.0) || !std::isfinite(measure[i])) {
      throw Error(ErrorCode::InvalidArgument,
                  "measure[" + std::to_string(i) + "] must be positive and finite");
    }
  }
  if (!(action_volume > 0.0) || !std::isfinite(action_volume)) {
    throw Error(ErrorCode::InvalidArgument, "action_volume must be positive and finite");
  }
}

}  // namespace galab
