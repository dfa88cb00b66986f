// Acceptance suite: one PASS/FAIL line per criterion, each with its own
// runtime budget. Exit status is non-zero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "oracles.hpp"
#include "pss/io.hpp"
#include "pss/linalg.hpp"
#include "pss/metrics.hpp"
#include "pss/projection.hpp"
#include "pss/solver.hpp"
#include "pss/synth.hpp"
#include "pss_cli.hpp"

using namespace pss;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  return cli::run(args, out, err);
}

struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& tag) {
    dir = fs::temp_directory_path() / ("pss_accept_" + tag + "_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

// ---------------------------------------------------------------------------

Outcome geometry_suite() {
  Outcome r;
  double worst = 0.0;
  for (Eigen::Index d : {2, 3, 8, 512}) {
    std::mt19937_64 gen(1000 + static_cast<std::uint64_t>(d));
    std::uniform_real_distribution<double> len(0.0, std::numbers::pi - 0.01);
    for (int t = 0; t < 1000; ++t) {
      const UnitVector p(oracle::random_unit_columns(gen, d, 1).col(0));
      const UnitVector z(oracle::random_unit_columns(gen, d, 1).col(0));
      const TangentVector v = log_map(p, z);
      const double el = (exp_map(v).coords() - z.coords()).norm();
      const double nrm = std::abs(v.norm() - std::acos(std::clamp(z.dot(p), -1.0, 1.0)));
      const double tan = v.norm() > 0 ? std::abs(v.vec().dot(p.coords())) / v.norm() : 0.0;

      const Vector w = oracle::random_unit_columns(gen, d, 1).col(0);
      const TangentVector dir = TangentVector::project_onto(p, w);
      const TangentVector u(p, dir.vec().normalized() * len(gen));
      const UnitVector e = exp_map(u);
      const double le = (log_map(p, e).vec() - u.vec()).norm();
      const double unit = std::abs(e.coords().norm() - 1.0);

      worst = std::max({worst, el, le, nrm});
      r.require(el < 1e-9, "Exp(Log) error " + fmt("%.3g", el) + " at d=" + std::to_string(d));
      r.require(le < 1e-9, "Log(Exp) error " + fmt("%.3g", le) + " at d=" + std::to_string(d));
      r.require(nrm < 1e-9, "|Log| != arccos, off by " + fmt("%.3g", nrm));
      r.require(tan <= 1e-8, "Log not tangent: " + fmt("%.3g", tan));
      r.require(unit < 1e-9, "Exp output off the sphere: " + fmt("%.3g", unit));
    }
  }
  if (r.ok) r.detail = "4000 pairs, worst round-trip/norm error " + fmt("%.2e", worst);
  return r;
}

Outcome mean_suite() {
  Outcome r;
  double worst_grad = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 gen(seed);
    Vector shift = Vector::Zero(16);
    shift(0) = 3.0;
    const Matrix pts = oracle::random_unit_columns(gen, 16, 400, shift);
    const UnitVector mu = intrinsic_mean(pts);
    Vector g = Vector::Zero(16);
    for (Eigen::Index j = 0; j < pts.cols(); ++j) g += oracle::log_map(mu.coords(), pts.col(j));
    const double gn = (g / static_cast<double>(pts.cols())).norm();
    worst_grad = std::max(worst_grad, gn);
    r.require(gn <= 1e-10, "mean tangent norm " + fmt("%.3g", gn));
  }

  Matrix two(3, 2);
  two << 1, 0, 0, 1, 0, 0;
  const UnitVector mid = intrinsic_mean(two);
  const Vector want = (Vector(3) << std::sqrt(0.5), std::sqrt(0.5), 0.0).finished();
  r.require((mid.coords() - want).norm() < 1e-9, "two-point midpoint off");

  for (int m : {3, 5, 8}) {
    Matrix ring(3, m);
    for (int i = 0; i < m; ++i) {
      const double a = 2 * std::numbers::pi * i / m;
      ring.col(i) << 0.6 * std::cos(a), 0.6 * std::sin(a), 0.8;
    }
    const UnitVector c = intrinsic_mean(ring);
    r.require((c.coords() - Vector::Unit(3, 2)).norm() < 1e-9, "symmetric ring mean off the pole");
  }
  if (r.ok) r.detail = "worst stationarity " + fmt("%.2e", worst_grad) + ", fixtures exact to 1e-9";
  return r;
}

LabeledEmbeddingSet three_classes(std::mt19937_64& gen, Eigen::Index d, bool capped) {
  std::vector<Matrix> data;
  for (int c = 0; c < 3; ++c) {
    Matrix x = oracle::anisotropic_class(gen, d, 20 + 5 * c, capped ? 0.0 : 0.5);
    if (capped) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        x.col(j) *= 0.3;
        x(0, j) += 1.0;
        x.col(j).normalize();
      }
    }
    data.push_back(std::move(x));
  }
  return {{"a", "b", "c"}, data};
}

// Class-balanced contrast built directly by the oracle for the frame the
// library uses: pooled-mean centering (euclidean) or Log at the Frechet
// mean (sphere).
std::vector<Matrix> oracle_frame(const LabeledEmbeddingSet& set, Geometry g, Vector& mu) {
  std::vector<Matrix> y;
  if (g == Geometry::Sphere) {
    mu = oracle::frechet_mean(set.pooled());
    for (const auto& x : set.all_data()) {
      Matrix m(x.rows(), x.cols());
      for (Eigen::Index j = 0; j < x.cols(); ++j) m.col(j) = oracle::log_map(mu, x.col(j));
      y.push_back(m);
    }
  } else {
    const Vector center = set.pooled().rowwise().mean();
    for (const auto& x : set.all_data()) y.push_back(x.colwise() - center);
  }
  return y;
}

Outcome solver_oracle() {
  Outcome r;
  std::mt19937_64 gen(2024);
  double worst_gap = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    const Eigen::Index d = 3 + inst % 4;
    const Eigen::Index k = 1 + inst % 2;
    const Geometry g = inst % 2 ? Geometry::Sphere : Geometry::Euclidean;
    const auto set = three_classes(gen, d, g == Geometry::Sphere);
    const double lambda = std::uniform_real_distribution<double>(0.0, 1.0)(gen);
    const Subspace s = fit_subspace(set, "b", lambda, k, g);

    Vector mu;
    const Matrix c = oracle::brute_contrast(oracle_frame(set, g, mu), 1, lambda);
    const auto eig = g == Geometry::Sphere ? oracle::tangent_eigen(c, mu) : oracle::jacobi_eigen(c);
    const double fitted = (s.basis.transpose() * c * s.basis).trace();
    const double gap = std::abs(fitted - eig.values.head(k).sum());
    worst_gap = std::max(worst_gap, gap);
    r.require(gap < 1e-7, "instance " + std::to_string(inst) + ": objective differs from top-k sum by " + fmt("%.3g", gap));

    // candidates honour the same constraint as the fit (tangent to mu on the sphere)
    const Matrix frame = g == Geometry::Sphere ? Matrix(eig.vectors) : Matrix::Identity(d, d);
    for (int t = 0; t < 10000; ++t) {
      const Matrix w = frame * oracle::random_orthonormal(gen, frame.cols(), k);
      const double v = (w.transpose() * c * w).trace();
      if (v > fitted + 1e-12) {
        r.require(false, "instance " + std::to_string(inst) + ": random candidate beats the fit");
        break;
      }
    }
  }
  if (r.ok) r.detail = "100 instances x 10000 candidates, worst |tr - sum eig| " + fmt("%.2e", worst_gap);
  return r;
}

Outcome lambda_endpoints() {
  Outcome r;
  std::mt19937_64 gen(77);
  double worst = 0.0;
  auto check = [&](double angle, const std::string& what) {
    worst = std::max(worst, angle);
    r.require(angle < 1e-7, what + " angle " + fmt("%.3g", angle));
  };
  for (int inst = 0; inst < 20; ++inst) {
    const Eigen::Index d = 4 + inst % 4;
    const Eigen::Index k = 1 + inst % 3;
    for (Geometry g : {Geometry::Euclidean, Geometry::Sphere}) {
      const auto set = three_classes(gen, d, g == Geometry::Sphere);
      Vector mu;
      const auto y = oracle_frame(set, g, mu);
      auto top = [&](const Matrix& m) {
        return g == Geometry::Sphere ? oracle::tangent_eigen(m, mu) : oracle::jacobi_eigen(m);
      };

      // lambda = 0: principal directions of the target's second moment
      const Subspace s0 = fit_subspace(set, "a", 0.0, k, g);
      check(max_principal_angle(s0.basis, top(y[0] * y[0].transpose()).vectors.leftCols(k)), "lambda=0");

      // lambda = 1: bottom eigenvectors of the pooled nuisance moment
      const Subspace s1 = fit_subspace(set, "a", 1.0, k, g);
      Matrix nuis = Matrix::Zero(d, d);
      for (std::size_t j = 1; j < 3; ++j) nuis += y[j] * y[j].transpose() / static_cast<double>(y[j].cols());
      check(max_principal_angle(s1.basis, top(nuis).vectors.rightCols(k)), "lambda=1");

      // a single class at lambda = 0 is textbook PCA / PGA
      const LabeledEmbeddingSet one({"a"}, {set.data(0)});
      const Subspace p = fit_subspace(one, "a", 0.0, k, g);
      Matrix ref;
      if (g == Geometry::Euclidean) {
        const Matrix cen = set.data(0).colwise() - set.data(0).rowwise().mean();
        ref = oracle::jacobi_eigen(cen * cen.transpose()).vectors.leftCols(k);
      } else {
        const Vector m = oracle::frechet_mean(set.data(0));
        Matrix lg(d, set.data(0).cols());
        for (Eigen::Index j = 0; j < lg.cols(); ++j) lg.col(j) = oracle::log_map(m, set.data(0).col(j));
        ref = oracle::tangent_eigen(lg * lg.transpose(), m).vectors.leftCols(k);
      }
      check(max_principal_angle(p.basis, ref), "single-class PCA/PGA");
    }

    // pooled form over equal-size classes is PCA of the pooled data
    std::vector<Matrix> eq;
    for (int c = 0; c < 3; ++c) eq.push_back(oracle::anisotropic_class(gen, d, 25));
    const LabeledEmbeddingSet same({"a", "b", "c"}, eq);
    const Subspace all = pca_baseline(same, kAllClasses, k, Geometry::Euclidean);
    Matrix pooled = same.pooled();
    pooled = pooled.colwise() - pooled.rowwise().mean();
    check(max_principal_angle(all.basis, oracle::jacobi_eigen(pooled * pooled.transpose()).vectors.leftCols(k)),
          "pooled PCA");
  }
  if (r.ok) r.detail = "140 comparisons, worst principal angle " + fmt("%.2e", worst);
  return r;
}

Outcome planted_invariance() {
  Outcome r;
  Scratch tmp("planted");
  const std::string data = tmp / "planted.emb";
  if (run_cli({"gen-synth", "--classes", "4", "--d", "32", "--planted-k", "2", "--kappa", "50", "--n", "500",
               "--seed", "0", "--output", data}) != 0) {
    r.require(false, "gen-synth failed");
    return r;
  }
  const auto set = read_embeddings(data).to_set();
  std::vector<Subspace> subs;
  for (int c = 0; c < 4; ++c) subs.push_back(fit_subspace(set, synth_class_name(c), 0.5, 2, Geometry::Sphere));
  const auto m = invariance_matrix(subs, set, true);
  double off = 0.0;
  for (Eigen::Index i = 0; i < 4; ++i) {
    r.require(std::abs(m.values(i, i) - 1.0) < 1e-12, "diagonal entry " + std::to_string(i) + " is not 1");
    for (Eigen::Index j = 0; j < 4; ++j)
      if (i != j) off = std::max(off, m.values(i, j));
  }
  r.require(off < 0.15, "largest off-diagonal " + fmt("%.4f", off));
  if (r.ok) r.detail = "diagonal 1, largest off-diagonal " + fmt("%.4f", off);
  return r;
}

Outcome projection_suite() {
  Outcome r;
  const auto fx = make_planted_fixture({.classes = 3, .n = 200, .d = 16, .planted_k = 3, .seed = 4});
  std::vector<Subspace> subs;
  for (int c = 0; c < 3; ++c) subs.push_back(fit_subspace(fx.set, synth_class_name(c), 0.5, 3, Geometry::Sphere));
  subs.push_back(fit_subspace(fx.set, "class_0", 0.5, 4, Geometry::Euclidean));
  std::mt19937_64 gen(5);
  double worst = 0.0;
  for (const auto& s : subs) {
    const Matrix p = s.basis * s.basis.transpose();
    for (int t = 0; t < 1000; ++t) {
      const UnitVector z(oracle::random_unit_columns(gen, 16, 1).col(0));
      const UnitVector a = project(s, z);
      const UnitVector b = project_complement(s, z);
      const double idem = (project(s, a).coords() - a.coords()).norm();
      const double idem_c = (project_complement(s, b).coords() - b.coords()).norm();
      const double unit = std::max(std::abs(a.coords().norm() - 1.0), std::abs(b.coords().norm() - 1.0));
      worst = std::max({worst, idem, idem_c});
      r.require(idem < 1e-8, "projection not idempotent: " + fmt("%.3g", idem));
      r.require(idem_c < 1e-8, "complement not idempotent: " + fmt("%.3g", idem_c));
      r.require(unit < 1e-9, "output not unit norm");
      if (s.geometry == Geometry::Sphere) {
        const Vector& mu = s.base_point->coords();
        const Vector v = oracle::log_map(mu, z.coords());
        const Vector in = p * v;
        const Vector out = v - in;
        const double pyth = std::abs(v.squaredNorm() - in.squaredNorm() - out.squaredNorm());
        const double dec = (in + out - v).cwiseAbs().maxCoeff();
        r.require(pyth < 1e-9, "Pythagorean identity off by " + fmt("%.3g", pyth));
        r.require(dec < 1e-12, "decomposition off by " + fmt("%.3g", dec));
        r.require(geodesic_distance(*s.base_point, a) <= geodesic_distance(*s.base_point, z) + 1e-9,
                  "projection moved a point away from the base point");
      }
    }
  }
  if (r.ok) r.detail = "4 subspaces x 1000 inputs, worst idempotence error " + fmt("%.2e", worst);
  return r;
}

Outcome full_rank_neutrality() {
  Outcome r;
  const auto fx = make_planted_fixture({.classes = 4, .n = 50, .d = 12, .planted_k = 2, .seed = 8});
  Matrix labels(12, 4);
  for (std::size_t c = 0; c < 4; ++c) labels.col(static_cast<Eigen::Index>(c)) = fx.set.data(c).rowwise().mean().normalized();
  const Subspace full = fit_subspace(fx.set, "class_0", 0.5, 11, Geometry::Sphere);
  const auto base = zero_shot_classify(fx.set, labels, fx.set.classes());
  const auto proj = zero_shot_classify(fx.set, labels, fx.set.classes(), full);
  r.require(base.n_samples == 200, "fixture is not 200 samples");
  std::size_t differ = 0;
  for (std::size_t i = 0; i < base.predictions.size(); ++i) differ += base.predictions[i] != proj.predictions[i];
  r.require(differ == 0, std::to_string(differ) + " predictions differ");
  if (r.ok) r.detail = "200/200 predictions identical, top1 " + fmt("%.3f", base.top1);
  return r;
}

Outcome baseline_ordinal() {
  Outcome r;
  const auto toy = make_contrast_toy(7);
  const Subspace ours = fit_subspace(toy, "blue", 0.5, 1, Geometry::Sphere);
  const auto y = frame_data(toy, DataFrame{Geometry::Sphere, ours.base_point, Vector()});
  const Subspace fkt = fkt_baseline(y[0], y[1], 1, ours.base_point);
  const Subspace fda = fda_baseline(toy, 1, Geometry::Sphere);
  const double deg = 180.0 / std::numbers::pi;
  const double of = max_principal_angle(ours.basis, fkt.basis) * deg;
  const double ff = max_principal_angle(fda.basis, fkt.basis) * deg;
  r.require(ff > of, "angle(FDA,FKT) " + fmt("%.2f", ff) + " deg <= angle(ours,FKT) " + fmt("%.2f", of) + " deg");
  if (r.ok) r.detail = "angle(FDA,FKT) " + fmt("%.2f", ff) + " deg > angle(ours,FKT) " + fmt("%.2f", of) + " deg";
  return r;
}

Outcome format_suite() {
  Outcome r;
  Scratch tmp("format");
  std::mt19937_64 gen(9);
  const LabeledEmbeddingSet set({"x", "y", "z"}, {oracle::random_unit_columns(gen, 8, 10),
                                                  oracle::random_unit_columns(gen, 8, 12),
                                                  oracle::random_unit_columns(gen, 8, 8)});
  const auto a = tmp / "a.emb", b = tmp / "b.emb";
  write_embeddings(set, a);
  write_embeddings(read_embeddings(a).to_set(), b);
  r.require(detail::read_file(a) == detail::read_file(b), "EMB1 f64 rewrite is not bitwise identical");

  const auto f32 = encode_embeddings(EmbeddingFile::from_set(set, DType::F32));
  r.require(encode_embeddings(decode_embeddings(f32)) == f32, "EMB1 f32 rewrite is not bitwise identical");

  const auto s = tmp / "s.pss", s2 = tmp / "s2.pss";
  if (run_cli({"fit", "--input", a, "--target", "y", "--k", "3", "--output", s}) != 0) {
    r.require(false, "fit on round-trip fixture failed");
    return r;
  }
  write_subspace(read_subspace(s), s2);
  r.require(detail::read_file(s) == detail::read_file(s2), "PSS1 rewrite is not bitwise identical");

  const std::string emb = detail::read_file(a);
  const std::string pss = detail::read_file(s);
  const auto emb_payload = emb.find('\n') + 1;
  const auto pss_payload = pss.find('\n') + 1;
  auto replaced = [](std::string bytes, const std::string& from, const std::string& to) {
    bytes.replace(bytes.find(from), from.size(), to);
    return bytes;
  };
  struct Case {
    std::string name;
    std::string bytes;
    bool is_subspace;
  };
  std::vector<Case> cases{
      {"EMB1 bad magic", "EMBX" + emb.substr(4), false},
      {"EMB1 truncated", emb.substr(0, emb.size() - 5), false},
      {"EMB1 trailing bytes", emb + "junk", false},
      {"EMB1 version 2", replaced(emb, "\"version\":1", "\"version\":2"), false},
      {"EMB1 broken JSON", replaced(emb, "{", "["), false},
      {"EMB1 label out of range", [&] { auto e = emb; e[emb_payload] = 9; return e; }(), false},
      {"PSS1 bad magic", "PSSX" + pss.substr(4), true},
      {"PSS1 truncated", pss.substr(0, pss.size() - 8), true},
      {"PSS1 k = 0", replaced(pss, "\"k\":3", "\"k\":0"), true},
      {"PSS1 flipped exponent byte", [&] { auto e = pss; e[pss_payload + 8 * 8 + 7] ^= 0x40; return e; }(), true},
  };
  for (const auto& c : cases) {
    const auto bad = tmp / "bad.bin";
    detail::write_file(bad, c.bytes);
    const int code = c.is_subspace
                         ? run_cli({"project", "--subspace", bad, "--input", a, "--output", tmp / "out.emb"})
                         : run_cli({"fit", "--input", bad, "--target", "y", "--k", "2", "--output", tmp / "out.pss"});
    r.require(code == cli::kIo, c.name + ": exit " + std::to_string(code) + ", want 1");
  }
  r.require(run_cli({"fit", "--input", tmp / "absent.emb", "--target", "y", "--output", tmp / "o.pss"}) == cli::kIo,
            "missing input file not exit 1");
  if (r.ok) r.detail = "3 bitwise round trips, " + std::to_string(cases.size() + 1) + " corrupt inputs -> exit 1";
  return r;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_s;
    std::function<Outcome()> fn;
  };
  const std::vector<Criterion> criteria{
      {"geometry suite", 5, geometry_suite},
      {"mean suite", 5, mean_suite},
      {"solver oracle equivalence", 60, solver_oracle},
      {"lambda endpoints", 5, lambda_endpoints},
      {"planted-subspace invariance", 30, planted_invariance},
      {"projection suite", 10, projection_suite},
      {"full-rank neutrality", 5, full_rank_neutrality},
      {"baseline ordinal check", 5, baseline_ordinal},
      {"format suite", 5, format_suite},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail = std::string("threw: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.ok && secs >= c.budget_s) {
      o.ok = false;
      o.detail = "over time budget";
    }
    failed += !o.ok;
    std::printf("%s  %-30s %6.2fs / %3.0fs  %s\n", o.ok ? "PASS" : "FAIL", c.name, secs, c.budget_s, o.detail.c_str());
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
