#include "ltg/lp.hpp"

#include <map>
#include <optional>
#include <stdexcept>

namespace ltg {

std::size_t LinearSystem::add_row(std::vector<Rational> coefficients, Sense s, Rational b, std::string label) {
  if (coefficients.size() != vars) throw std::invalid_argument("row has the wrong number of coefficients");
  rows.push_back(std::move(coefficients));
  sense.push_back(s);
  rhs.push_back(std::move(b));
  labels.push_back(std::move(label));
  return rows.size() - 1;
}

LinearSystem expand_equalities(const LinearSystem& system) {
  LinearSystem out;
  out.vars = system.vars;
  out.var_names = system.var_names;
  for (std::size_t j = 0; j < system.rows.size(); ++j) {
    if (system.sense[j] == Sense::LessEq) {
      out.add_row(system.rows[j], Sense::LessEq, system.rhs[j], system.labels[j]);
      continue;
    }
    std::vector<Rational> neg(system.vars);
    for (std::size_t v = 0; v < system.vars; ++v) neg[v] = -system.rows[j][v];
    out.add_row(system.rows[j], Sense::LessEq, system.rhs[j], system.labels[j] + " (<=)");
    out.add_row(std::move(neg), Sense::LessEq, -system.rhs[j], system.labels[j] + " (>=)");
  }
  return out;
}

namespace {

struct WorkRow {
  std::vector<Rational> coef;
  Rational b;
  std::vector<Rational> combo;  // signed weights on the original rows
};

bool all_zero(const std::vector<Rational>& v) {
  for (const auto& x : v)
    if (x != 0) return false;
  return true;
}

// target += factor * source
void axpy(WorkRow& target, const Rational& factor, const WorkRow& source) {
  for (std::size_t v = 0; v < target.coef.size(); ++v)
    if (source.coef[v] != 0) target.coef[v] += factor * source.coef[v];
  target.b += factor * source.b;
  for (std::size_t j = 0; j < target.combo.size(); ++j)
    if (source.combo[j] != 0) target.combo[j] += factor * source.combo[j];
}

void scale(WorkRow& row, const Rational& factor) {
  for (auto& c : row.coef) c *= factor;
  row.b *= factor;
  for (auto& c : row.combo) c *= factor;
}

std::vector<Rational> to_expanded(const LinearSystem& system, const std::vector<Rational>& combo) {
  std::vector<Rational> out;
  for (std::size_t j = 0; j < system.rows.size(); ++j) {
    if (system.sense[j] == Sense::LessEq) {
      out.push_back(combo[j]);
    } else {
      out.push_back(combo[j] > 0 ? combo[j] : Rational(0));
      out.push_back(combo[j] < 0 ? Rational(-combo[j]) : Rational(0));
    }
  }
  return out;
}

FeasibilityCertificate infeasible(const LinearSystem& system, WorkRow row) {
  // row reads 0 (<= or =) b with b < 0 (or b != 0 for an equality combination).
  // Negative scaling only happens for pure equality combinations, whose weights are free.
  scale(row, Rational(-1) / row.b);
  FeasibilityCertificate cert;
  cert.feasible = false;
  cert.multipliers = to_expanded(system, row.combo);
  return cert;
}

// Divides by |first nonzero coefficient| and keeps the tightest of parallel rows.
std::vector<WorkRow> normalize(std::vector<WorkRow> rows) {
  std::map<std::vector<Rational>, std::size_t> seen;
  std::vector<WorkRow> out;
  for (auto& row : rows) {
    if (all_zero(row.coef)) {
      if (row.b >= 0) continue;
      out.push_back(std::move(row));
      continue;
    }
    for (const auto& c : row.coef)
      if (c != 0) {
        scale(row, Rational(1) / (c < 0 ? Rational(-c) : c));
        break;
      }
    auto it = seen.find(row.coef);
    if (it == seen.end()) {
      seen.emplace(row.coef, out.size());
      out.push_back(std::move(row));
    } else if (row.b < out[it->second].b) {
      out[it->second] = std::move(row);
    }
  }
  return out;
}

}  // namespace

FeasibilityCertificate solve_feasibility(const LinearSystem& system) {
  const std::size_t V = system.vars, R = system.rows.size();
  std::vector<WorkRow> eqs, ineqs;
  for (std::size_t j = 0; j < R; ++j) {
    if (system.rows[j].size() != V) throw std::invalid_argument("ragged linear system");
    WorkRow row{system.rows[j], system.rhs[j], std::vector<Rational>(R, 0)};
    row.combo[j] = 1;
    (system.sense[j] == Sense::Equal ? eqs : ineqs).push_back(std::move(row));
  }

  // Gaussian substitution of equalities.
  std::vector<std::pair<std::size_t, WorkRow>> pivots;
  std::vector<bool> pivoted(V, false);
  for (std::size_t e = 0; e < eqs.size(); ++e) {
    WorkRow& eq = eqs[e];
    std::optional<std::size_t> pivot;
    for (std::size_t v = 0; v < V && !pivot; ++v)
      if (eq.coef[v] != 0) pivot = v;
    if (!pivot) {
      if (eq.b != 0) return infeasible(system, eq);
      continue;
    }
    const std::size_t v = *pivot;
    for (std::size_t f = e + 1; f < eqs.size(); ++f)
      if (eqs[f].coef[v] != 0) axpy(eqs[f], -eqs[f].coef[v] / eq.coef[v], eq);
    for (auto& row : ineqs)
      if (row.coef[v] != 0) axpy(row, -row.coef[v] / eq.coef[v], eq);
    pivoted[v] = true;
    pivots.emplace_back(v, eq);
  }

  // Fourier-Motzkin on the remaining variables.
  std::vector<std::pair<std::size_t, std::vector<WorkRow>>> history;
  ineqs = normalize(std::move(ineqs));
  for (std::size_t v = 0; v < V; ++v) {
    for (const auto& row : ineqs)
      if (all_zero(row.coef) && row.b < 0) return infeasible(system, row);
    if (pivoted[v]) continue;
    std::vector<WorkRow> pos, neg, rest;
    for (auto& row : ineqs) {
      if (row.coef[v] > 0) {
        pos.push_back(std::move(row));
      } else if (row.coef[v] < 0) {
        neg.push_back(std::move(row));
      } else {
        rest.push_back(std::move(row));
      }
    }
    for (const auto& p : pos)
      for (const auto& n : neg) {
        WorkRow combined = p;
        scale(combined, -n.coef[v]);
        axpy(combined, p.coef[v], n);
        combined.coef[v] = 0;
        rest.push_back(std::move(combined));
      }
    std::vector<WorkRow> bounds = std::move(pos);
    for (auto& n : neg) bounds.push_back(std::move(n));
    history.emplace_back(v, std::move(bounds));
    ineqs = normalize(std::move(rest));
  }
  for (const auto& row : ineqs)
    if (row.b < 0) return infeasible(system, row);

  // Back-substitution.
  std::vector<Rational> y(V, 0);
  for (auto it = history.rbegin(); it != history.rend(); ++it) {
    const std::size_t v = it->first;
    std::optional<Rational> lo, hi;
    for (const auto& row : it->second) {
      Rational rem = row.b;
      for (std::size_t u = 0; u < V; ++u)
        if (u != v && row.coef[u] != 0) rem -= row.coef[u] * y[u];
      Rational bound = rem / row.coef[v];
      if (row.coef[v] > 0) {
        if (!hi || bound < *hi) hi = bound;
      } else {
        if (!lo || bound > *lo) lo = bound;
      }
    }
    if (lo && *lo > 0) {
      y[v] = *lo;
    } else if (hi && *hi < 0) {
      y[v] = *hi;
    } else {
      y[v] = 0;
    }
  }
  for (auto it = pivots.rbegin(); it != pivots.rend(); ++it) {
    const auto& [v, row] = *it;
    Rational rem = row.b;
    for (std::size_t u = 0; u < V; ++u)
      if (u != v && row.coef[u] != 0) rem -= row.coef[u] * y[u];
    y[v] = rem / row.coef[v];
  }
  FeasibilityCertificate cert;
  cert.feasible = true;
  cert.solution = std::move(y);
  if (!verify_certificate(system, cert)) throw std::logic_error("solve_feasibility: back-substituted point fails");
  return cert;
}

bool verify_certificate(const LinearSystem& system, const FeasibilityCertificate& cert) {
  if (cert.feasible) {
    if (cert.solution.size() != system.vars) return false;
    for (std::size_t j = 0; j < system.rows.size(); ++j) {
      Rational lhs = 0;
      for (std::size_t v = 0; v < system.vars; ++v) lhs += system.rows[j][v] * cert.solution[v];
      if (system.sense[j] == Sense::Equal ? lhs != system.rhs[j] : lhs > system.rhs[j]) return false;
    }
    return true;
  }
  const LinearSystem expanded = expand_equalities(system);
  if (cert.multipliers.size() != expanded.rows.size()) return false;
  std::vector<Rational> combo(system.vars, 0);
  Rational b = 0;
  for (std::size_t j = 0; j < expanded.rows.size(); ++j) {
    const Rational& y = cert.multipliers[j];
    if (y < 0) return false;
    if (y == 0) continue;
    for (std::size_t v = 0; v < system.vars; ++v) combo[v] += y * expanded.rows[j][v];
    b += y * expanded.rhs[j];
  }
  return all_zero(combo) && b == -1;
}

}  // namespace ltg
