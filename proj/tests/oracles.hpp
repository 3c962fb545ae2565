#pragma once

#include <vector>

#include "graspmimic/graspmimic.hpp"

namespace graspmimic::test {

/// Exact hull-inscribed radius: the smallest offset of any supporting hyperplane
/// spanned by six wrenches. Exponential in the wrench count; for small fixtures only.
inline double exact_epsilon(const std::vector<Wrench>& w) {
  const int n = static_cast<int>(w.size());
  double best = std::numeric_limits<double>::infinity();
  std::array<int, 6> idx{};
  const auto visit = [&](const auto& self, int start, int depth) -> void {
    if (depth == 6) {
      Eigen::Matrix<double, 6, 6> a;
      for (int k = 0; k < 6; ++k) a.row(k) = w[static_cast<std::size_t>(idx[k])].transpose();
      const Eigen::FullPivLU<Eigen::Matrix<double, 6, 6>> lu(a);
      if (lu.rank() < 6) return;
      const Wrench normal = lu.solve(Wrench::Ones());  // plane normal . x = 1
      for (const Wrench& x : w) {
        if (x.dot(normal) > 1.0 + 1e-9) return;
      }
      best = std::min(best, 1.0 / normal.norm());
      return;
    }
    for (int i = start; i < n; ++i) {
      idx[static_cast<std::size_t>(depth)] = i;
      self(self, i + 1, depth + 1);
    }
  };
  visit(visit, 0, 0);
  return best;
}

/// Unit-sphere contacts around +x and -x: each pad has a centre point and two
/// points offset along y and z, so the wrenches span all six dimensions.
inline std::vector<Contact> antipodal_pads(double spread = 0.15) {
  std::vector<Contact> out;
  for (double side : {1.0, -1.0}) {
    for (const Vec3& o : {Vec3(0, 0, 0), Vec3(0, spread, 0), Vec3(0, 0, spread)}) {
      const Vec3 p = (Vec3(side, 0, 0) + o).normalized();
      out.push_back({p, p});
    }
  }
  return out;
}

}  // namespace graspmimic::test
