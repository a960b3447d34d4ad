#include "orthoq/chainrule.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace orthoq {

namespace {

std::int64_t factorial(int n) {
  std::int64_t f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

std::int64_t exponent_factorial(const std::vector<int>& e) {
  std::int64_t f = 1;
  for (int v : e) f *= factorial(v);
  return f;
}

MultiIndex exponents_to_index(const std::vector<int>& e) {
  std::vector<int> entries;
  for (std::size_t r = 0; r < e.size(); ++r)
    for (int c = 0; c < e[r]; ++c) entries.push_back(static_cast<int>(r) + 1);
  return MultiIndex(entries);
}

// All nonzero exponent vectors l <= nu elementwise, lexicographic.
std::vector<std::vector<int>> inner_index_candidates(const std::vector<int>& nu) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(nu.size(), 0);
  while (true) {
    int d = static_cast<int>(nu.size()) - 1;
    while (d >= 0 && cur[static_cast<std::size_t>(d)] == nu[static_cast<std::size_t>(d)]) {
      cur[static_cast<std::size_t>(d)] = 0;
      --d;
    }
    if (d < 0) break;
    ++cur[static_cast<std::size_t>(d)];
    out.push_back(cur);
  }
  return out;
}

// Non-negative integer compositions of `total` into `parts` slots.
void for_each_composition(int total, int parts, std::vector<int>& cur, int pos,
                          const std::function<void()>& emit) {
  if (pos == parts - 1) {
    cur[static_cast<std::size_t>(pos)] = total;
    emit();
    return;
  }
  for (int v = 0; v <= total; ++v) {
    cur[static_cast<std::size_t>(pos)] = v;
    for_each_composition(total - v, parts, cur, pos + 1, emit);
  }
}

// Enumerates assignments {inner block l with per-output multiplicities k_l}
// with sum_l |k_l| * l = nu. Each assignment contributes one template term in
// the column lambda = sum_l k_l with coefficient nu! / prod_l (k_l!) (l!)^{|k_l|}.
struct RowBuilder {
  const std::vector<std::vector<int>>& candidates;
  const IndexFamily& eta_fam;
  const IndexFamily& cols_fam;
  int d_out;
  std::int64_t nu_factorial;
  std::vector<FaaDiBrunoTemplate::Term>& out;

  std::vector<int> lambda;
  std::vector<FaaDiBrunoTemplate::Factor> factors;

  void recurse(std::size_t idx, const std::vector<int>& rem, std::int64_t denom) {
    bool rem_zero = true;
    for (int v : rem) rem_zero = rem_zero && v == 0;
    if (idx == candidates.size()) {
      if (!rem_zero) return;
      int lam_total = 0;
      for (int v : lambda) lam_total += v;
      if (lam_total == 0) return;
      FaaDiBrunoTemplate::Term term;
      term.col = cols_fam.position(exponents_to_index(lambda));
      term.coeff = static_cast<double>(nu_factorial) / static_cast<double>(denom);
      term.factors = factors;
      out.push_back(std::move(term));
      return;
    }
    const std::vector<int>& l = candidates[idx];
    int cmax = rem_zero ? 0 : (1 << 20);
    for (std::size_t r = 0; r < l.size(); ++r)
      if (l[r] > 0) cmax = std::min(cmax, rem[r] / l[r]);

    recurse(idx + 1, rem, denom);  // block unused

    if (cmax <= 0) return;
    const std::int64_t l_fact = exponent_factorial(l);
    const int eta_index = eta_fam.position(exponents_to_index(l));
    std::int64_t lpow = 1;
    std::vector<int> rem2 = rem;
    for (int c = 1; c <= cmax; ++c) {
      lpow *= l_fact;
      for (std::size_t r = 0; r < l.size(); ++r) rem2[r] -= l[r];
      std::vector<int> comp(static_cast<std::size_t>(d_out), 0);
      const std::int64_t denom_c = denom * lpow;
      for_each_composition(c, d_out, comp, 0, [&] {
        std::int64_t kfact = 1;
        for (int kv : comp) kfact *= factorial(kv);
        const std::size_t nfac = factors.size();
        for (int i = 0; i < d_out; ++i) {
          const int ki = comp[static_cast<std::size_t>(i)];
          if (ki == 0) continue;
          lambda[static_cast<std::size_t>(i)] += ki;
          factors.push_back({eta_index, i, ki});
        }
        recurse(idx + 1, rem2, denom_c * kfact);
        for (int i = 0; i < d_out; ++i)
          lambda[static_cast<std::size_t>(i)] -= comp[static_cast<std::size_t>(i)];
        factors.resize(nfac);
      });
    }
  }
};

}  // namespace

FaaDiBrunoTemplate::FaaDiBrunoTemplate(int d_eta, int d_out, int q)
    : rows_fam_(enumerate_indices(d_eta, q)), cols_fam_(enumerate_indices(d_out, q)) {
  terms_.resize(static_cast<std::size_t>(rows_fam_.size()));
  for (int r = 0; r < rows_fam_.size(); ++r) {
    const std::vector<int> nu = rows_fam_.at(r).exponents(d_eta);
    const auto candidates = inner_index_candidates(nu);
    RowBuilder rb{candidates,
                  rows_fam_,
                  cols_fam_,
                  d_out,
                  exponent_factorial(nu),
                  terms_[static_cast<std::size_t>(r)],
                  std::vector<int>(static_cast<std::size_t>(d_out), 0),
                  {}};
    rb.recurse(0, nu, 1);
  }
}

const FaaDiBrunoTemplate& FaaDiBrunoTemplate::get(int d_eta, int d_out, int q) {
  static std::mutex mtx;
  static std::map<std::tuple<int, int, int>, std::unique_ptr<FaaDiBrunoTemplate>> cache;
  std::lock_guard<std::mutex> lock(mtx);
  const auto key = std::make_tuple(d_eta, d_out, q);
  auto it = cache.find(key);
  if (it == cache.end()) {
    it = cache
             .emplace(key,
                      std::unique_ptr<FaaDiBrunoTemplate>(new FaaDiBrunoTemplate(d_eta, d_out, q)))
             .first;
  }
  return *it->second;
}

Eigen::MatrixXd FaaDiBrunoTemplate::evaluate(const MeanDerivatives& md) const {
  if (md.d_eta != rows_fam_.d_eta() || md.d_out != cols_fam_.d_eta())
    throw std::invalid_argument("FaaDiBrunoTemplate: mean derivatives have wrong dimensions");
  if (md.derivs.rows() != md.d_out || md.derivs.cols() < rows_fam_.size()) {
    std::ostringstream os;
    os << "FaaDiBrunoTemplate: incomplete mean derivatives, missing indices:";
    for (int k = static_cast<int>(md.derivs.cols()); k < rows_fam_.size(); ++k)
      os << ' ' << rows_fam_.at(k).to_string();
    throw std::invalid_argument(os.str());
  }
  if (!md.derivs.allFinite() || !md.value.allFinite())
    throw std::invalid_argument("FaaDiBrunoTemplate: non-finite mean derivative entries");

  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows_fam_.size(), cols_fam_.size());
  for (int r = 0; r < rows_fam_.size(); ++r) {
    for (const Term& term : terms_[static_cast<std::size_t>(r)]) {
      double v = term.coeff;
      for (const Factor& f : term.factors) {
        const double g = md.derivs(f.output, f.eta_index);
        for (int p = 0; p < f.power; ++p) v *= g;
      }
      m(r, term.col) += v;
    }
  }
  return m;
}

Eigen::MatrixXd faa_di_bruno_matrix(const MeanDerivatives& md, int q) {
  return FaaDiBrunoTemplate::get(md.d_eta, md.d_out, q).evaluate(md);
}

}  // namespace orthoq
