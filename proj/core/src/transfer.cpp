#include "chebnet/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "chebnet/rng.hpp"

namespace chebnet {

std::string to_string(PerturbKind k) {
  return k == PerturbKind::weight_noise ? "weight_noise" : "edge_toggle";
}

PerturbKind perturb_kind_from_string(std::string_view s) {
  if (s == "weight_noise") return PerturbKind::weight_noise;
  if (s == "edge_toggle") return PerturbKind::edge_toggle;
  throw std::invalid_argument("unknown perturbation kind: " + std::string(s));
}

namespace {

double sparse_spectral_norm(const SparseMatrix& m, const PowerIterOptions& opts) {
  const PowerIterResult r = spectral_norm_sym(
      m.n, [&](std::span<const double> in, std::span<double> out) { spmv(m, in, out); }, opts);
  return r.value;
}

// symmetric Gaussian values on the support of `lap`
SparseMatrix noise_on_support(const SparseMatrix& lap, Rng& rng) {
  SparseMatrix e = lap;
  std::fill(e.values.begin(), e.values.end(), 0.0);
  for (std::size_t r = 0; r < lap.n; ++r)
    for (std::size_t k = lap.offsets[r]; k < lap.offsets[r + 1]; ++k) {
      const std::size_t c = lap.indices[k];
      if (c < r) continue;  // fill upper triangle + diagonal, mirror below
      const double g = rng.normal();
      e.values[k] = g;
      if (c != r) {
        // mirror (c, r)
        for (std::size_t kk = lap.offsets[c]; kk < lap.offsets[c + 1]; ++kk)
          if (lap.indices[kk] == r) {
            e.values[kk] = g;
            break;
          }
      }
    }
  return e;
}

SparseMatrix toggle_pairs(const SparseMatrix& lap, double eps, Rng& rng) {
  const std::size_t n = lap.n;
  if (n < 2) throw std::invalid_argument("perturb_laplacian: graph too small to toggle edges");
  std::size_t off_pairs = 0;
  double off_mag = 0.0;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = lap.offsets[r]; k < lap.offsets[r + 1]; ++k)
      if (lap.indices[k] > r) {
        off_pairs += 1;
        off_mag += std::abs(lap.values[k]);
      }
  const double add_mag = off_pairs > 0 ? off_mag / static_cast<double>(off_pairs) : 1.0;

  const std::size_t all_pairs = n * (n - 1) / 2;
  const auto want = static_cast<std::size_t>(
      std::max<double>(1.0, std::floor(eps * static_cast<double>(std::max<std::size_t>(off_pairs, 1)))));
  if (want > all_pairs)
    throw std::invalid_argument("perturb_laplacian: eps asks for more toggles than node pairs");

  std::vector<std::pair<std::size_t, std::size_t>> chosen;
  chosen.reserve(want);
  while (chosen.size() < want) {
    const std::size_t u = rng.uniform_int(0, n - 1);
    const std::size_t v = rng.uniform_int(0, n - 1);
    if (u == v) continue;
    const auto pr = std::minmax(u, v);
    if (std::find(chosen.begin(), chosen.end(), std::make_pair(pr.first, pr.second)) !=
        chosen.end())
      continue;
    chosen.push_back({pr.first, pr.second});
  }

  // E as a COO -> CSR build: removal cancels the entry, addition inserts -add_mag
  std::vector<EdgeSpec> entries;
  for (const auto& [u, v] : chosen) {
    const double present = lap.at(u, v);
    const double val = present != 0.0 ? -present : -add_mag;
    entries.push_back({u, v, 0.0});
    entries.back().w = val;
  }
  // assemble symmetric CSR by reusing the graph builder pattern
  SparseMatrix e;
  e.n = n;
  std::vector<std::vector<std::pair<std::size_t, double>>> rows(n);
  for (const EdgeSpec& ent : entries) {
    rows[ent.u].push_back({ent.v, ent.w});
    rows[ent.v].push_back({ent.u, ent.w});
  }
  e.offsets.push_back(0);
  for (std::size_t r = 0; r < n; ++r) {
    std::sort(rows[r].begin(), rows[r].end());
    for (const auto& [c, w] : rows[r]) {
      e.indices.push_back(c);
      e.values.push_back(w);
    }
    e.offsets.push_back(e.indices.size());
  }
  return e;
}

}  // namespace

PerturbResult perturb_laplacian(const SparseMatrix& lap, PerturbKind kind, double eps,
                                std::uint64_t seed, const PowerIterOptions& norm_opts) {
  if (!(eps > 0.0)) throw std::invalid_argument("perturb_laplacian: eps must be positive");

  Rng rng(seed);
  SparseMatrix e = kind == PerturbKind::weight_noise ? noise_on_support(lap, rng)
                                                     : toggle_pairs(lap, eps, rng);

  PowerIterOptions opts = norm_opts;
  opts.seed = derive_seed(seed, 0x5CA1E);
  const double raw_norm = sparse_spectral_norm(e, opts);
  if (raw_norm == 0.0)
    throw std::invalid_argument("perturb_laplacian: degenerate zero perturbation");
  for (auto& v : e.values) v *= eps / raw_norm;

  PerturbResult res;
  res.info.kind = kind;
  res.info.target_eps = eps;
  res.info.realized_norm = sparse_spectral_norm(e, opts);
  res.info.e = e;
  res.perturbed = csr_add(lap, e);
  return res;
}

FilterDistance filter_distance(const ChebCoeffs& coeffs, const ScaledLaplacian& a,
                               const ScaledLaplacian& b, const PowerIterOptions& opts) {
  if (a.matrix.n != b.matrix.n)
    throw std::invalid_argument("filter_distance: operators differ in dimension");
  const std::size_t n = a.matrix.n;

  const LinearOperator apply = [&](std::span<const double> in, std::span<double> out) {
    Matrix h(n, 1);
    std::copy(in.begin(), in.end(), h.data.begin());
    const Matrix ya = cheb_apply(a, coeffs, h).output;
    const Matrix yb = cheb_apply(b, coeffs, h).output;
    for (std::size_t i = 0; i < n; ++i) out[i] = ya.data[i] - yb.data[i];
  };

  const PowerIterResult r = spectral_norm_sym(n, apply, opts);
  return {r.value, r.converged};
}

std::string StabilityReport::to_csv() const {
  std::ostringstream out;
  out << "epsilon,realized_norm,mean_distance,std_distance,ratio\n";
  char buf[192];
  for (const StabilityRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", r.eps, r.realized_norm,
                  r.mean_distance, r.std_distance, r.ratio);
    out << buf;
  }
  if (slope_defined) {
    std::snprintf(buf, sizeof buf, "# slope=%.17g intercept=%.17g r2=%.17g\n", slope, intercept,
                  r2);
    out << buf;
  } else {
    out << "# slope=undefined (needs at least two epsilon values)\n";
  }
  return out.str();
}

StabilityReport stability_sweep(const SparseMatrix& lap, const ChebCoeffs& coeffs,
                                std::span<const double> eps_list, std::size_t trials,
                                std::uint64_t seed, PerturbKind kind,
                                const PowerIterOptions& opts) {
  if (eps_list.empty()) throw std::invalid_argument("stability_sweep: empty epsilon list");
  if (trials < 1) throw std::invalid_argument("stability_sweep: trials must be >= 1");

  std::vector<double> sorted(eps_list.begin(), eps_list.end());
  std::sort(sorted.begin(), sorted.end());

  StabilityReport rep;
  const ScaledLaplacian base = scaled_laplacian(lap, 2.0);

  for (std::size_t ei = 0; ei < sorted.size(); ++ei) {
    const double eps = sorted[ei];
    std::vector<double> dists, norms;
    for (std::size_t t = 0; t < trials; ++t) {
      const std::uint64_t trial_seed = derive_seed(seed, ei * 1000 + t);
      const PerturbResult pr = perturb_laplacian(lap, kind, eps, trial_seed, opts);
      PowerIterOptions dist_opts = opts;
      dist_opts.seed = derive_seed(trial_seed, 0x5CA1E);  // same start vector as the norm
      const FilterDistance fd =
          filter_distance(coeffs, base, scaled_laplacian(pr.perturbed, 2.0), dist_opts);
      rep.all_converged &= fd.converged;
      dists.push_back(fd.value);
      norms.push_back(pr.info.realized_norm);
    }
    StabilityRow row;
    row.eps = eps;
    for (const double d : dists) row.mean_distance += d;
    row.mean_distance /= static_cast<double>(trials);
    for (const double d : dists)
      row.std_distance += (d - row.mean_distance) * (d - row.mean_distance);
    row.std_distance = std::sqrt(row.std_distance / static_cast<double>(trials));
    for (const double v : norms) row.realized_norm += v;
    row.realized_norm /= static_cast<double>(trials);
    row.ratio = row.mean_distance / row.realized_norm;
    rep.rows.push_back(row);
  }

  if (rep.rows.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    const auto m = static_cast<double>(rep.rows.size());
    for (const StabilityRow& r : rep.rows) {
      const double x = std::log(r.realized_norm);
      const double y = std::log(std::max(r.mean_distance, 1e-300));
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      syy += y * y;
    }
    const double denom = m * sxx - sx * sx;
    rep.slope = (m * sxy - sx * sy) / denom;
    rep.intercept = (sy - rep.slope * sx) / m;
    const double ss_res = syy - rep.intercept * sy - rep.slope * sxy;
    const double ss_tot = syy - sy * sy / m;
    rep.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    rep.slope_defined = true;
  }
  return rep;
}

TransferResult size_transfer(const SbmConfig& small_cfg, const SbmConfig& large_cfg,
                             const ModelSpec& spec, const TrainConfig& tcfg,
                             const TransferProtocol& protocol) {
  if (small_cfg.n_communities != large_cfg.n_communities)
    throw std::invalid_argument("size_transfer: community counts differ");
  if (small_cfg.p != large_cfg.p || small_cfg.q != large_cfg.q)
    throw std::invalid_argument("size_transfer: edge probabilities differ");

  Dataset small = gen_cluster_like(
      small_cfg, protocol.n_train + protocol.n_val + protocol.n_test);
  Splits s;
  for (std::size_t i = 0; i < protocol.n_train; ++i) s.train.push_back(i);
  for (std::size_t i = 0; i < protocol.n_val; ++i) s.val.push_back(protocol.n_train + i);
  for (std::size_t i = 0; i < protocol.n_test; ++i)
    s.test.push_back(protocol.n_train + protocol.n_val + i);
  set_splits(small, std::move(s));

  SbmConfig large = large_cfg;
  large.seed = derive_seed(large_cfg.seed, 0x1A26E);
  Dataset big = gen_cluster_like(large, protocol.n_eval_large);
  std::vector<std::size_t> big_idx(big.graphs.size());
  for (std::size_t i = 0; i < big_idx.size(); ++i) big_idx[i] = i;

  TransferResult result;
  result.training = train(spec, small, tcfg);

  std::vector<double> small_vals, large_vals;
  for (const SeedRun& run : result.training.runs) {
    if (run.diverged || run.best_epoch < 0) continue;
    Model model = build_model(spec, run.seed);
    model.params = run.best_params;
    model.buffers = run.best_buffers;
    small_vals.push_back(evaluate(model, small, small.splits.test, tcfg.batch_size));
    large_vals.push_back(evaluate(model, big, big_idx, tcfg.batch_size));
  }
  const std::string name = metric_name_for(spec.task);
  result.small_test = MetricReport::from(name + "_small", std::move(small_vals));
  result.large_eval = MetricReport::from(name + "_large", std::move(large_vals));
  result.gap = result.small_test.mean - result.large_eval.mean;
  return result;
}

}  // namespace chebnet
