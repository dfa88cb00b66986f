#pragma once

// Command-line front end. Exit codes: 0 success, 1 I/O or file format,
// 2 numeric failure, 3 usage. Structured output goes to `out`, diagnostics
// to `err`.

#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pss/errors.hpp"
#include "pss/io.hpp"
#include "pss/linalg.hpp"
#include "pss/metrics.hpp"
#include "pss/projection.hpp"
#include "pss/solver.hpp"
#include "pss/synth.hpp"

namespace pss::cli {

enum ExitCode : int { kOk = 0, kIo = 1, kNumeric = 2, kUsage = 3 };

inline int exit_code_for(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Io: return kIo;
    case ErrorCategory::Numeric: return kNumeric;
    case ErrorCategory::Usage: return kUsage;
  }
  return kNumeric;
}

inline std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline nlohmann::json to_json(const Vector& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

struct MeanArgs {
  std::string input, output;
  double tol = 1e-10;
  int max_iter = 200;
};

struct FitArgs {
  std::string input, target, theme, output;
  double lambda = 0.5;
  long k = 500;
  std::string geometry = "sphere";
  bool no_center = false;
  bool unweighted = false;
};

struct ProjectArgs {
  std::string subspace, input, output;
  bool complement = false;
};

struct InvarianceArgs {
  std::vector<std::string> subspaces;
  std::string input;
  bool row_normalize = false;
  std::string format = "csv";
};

struct ClassifyArgs {
  std::string images, labels, subspace, format = "json", name = "dataset";
  bool softmax = false;
};

struct SynthArgs {
  int classes = 4;
  long n = 500;
  long d = 32;
  double kappa = 50.0;
  long planted_k = 2;
  std::uint64_t seed = 0;
  std::string output;
};

struct CompareArgs {
  std::string input, target;
  long k = 1;
  std::vector<std::string> methods{"ours", "pca", "pga", "fkt", "fda"};
  double lambda = 0.5;
  std::string geometry = "sphere";
  bool no_center = false;
  bool unweighted = false;
};

/// Sidecar path for the planted subspace of class c.
inline std::string planted_path(const std::string& output, int c) {
  return output + ".planted." + synth_class_name(c) + ".pss";
}

class App {
 public:
  App(std::ostream& out, std::ostream& err) : out_(out), err_(err) {
    warn_ = [this](const std::string& m) { err_ << "warning: " << m << '\n'; };
  }

  int cmd_mean(const MeanArgs& a) {
    const auto f = read_embeddings_any(a.input, warn_);
    MeanOptions mo;
    mo.tol = a.tol;
    mo.max_iter = a.max_iter;
    if (!(a.tol > 0.0) || a.max_iter < 0) throw Error(ErrorKind::InvalidArgument, "tol must be > 0, max-iter >= 0");
    const UnitVector mu = intrinsic_mean(f.rows, mo);
    write_embeddings(EmbeddingFile::from_columns(mu.coords(), DType::F64), a.output);
    return kOk;
  }

  int cmd_fit(const FitArgs& a) {
    if (a.target.empty() == a.theme.empty()) {
      throw Error(ErrorKind::InvalidArgument, "give exactly one of --target or --theme");
    }
    check_lambda(a.lambda);
    if (a.k < 1) throw Error(ErrorKind::InvalidArgument, "--k must be >= 1");
    const auto set = read_embeddings_any(a.input, warn_).to_set();
    FitOptions fo;
    fo.center = !a.no_center;
    fo.class_balanced = !a.unweighted;
    const Geometry g = parse_geometry(a.geometry);
    Subspace s;
    if (!a.theme.empty()) {
      const auto theme = read_embeddings_any(a.theme, warn_);
      const auto name = std::filesystem::path(a.theme).stem().string();
      s = fit_theme_subspace(set, theme.rows, a.lambda, a.k, g, fo, name.empty() ? "theme" : name);
    } else {
      s = fit_subspace(set, a.target, a.lambda, a.k, g, fo);
    }
    write_subspace(s, a.output);
    nlohmann::json j;
    j["class_name"] = s.class_name;
    j["k"] = s.k();
    j["lambda"] = s.lambda;
    j["geometry"] = std::string(to_string(s.geometry));
    j["top_eigenvalue"] = s.eigenvalues(0);
    j["eigenvalue_sum"] = s.eigenvalues.sum();
    out_ << j.dump() << '\n';
    return kOk;
  }

  int cmd_project(const ProjectArgs& a) {
    const Subspace s = read_subspace(a.subspace);
    auto f = read_embeddings_any(a.input, warn_);
    detail::require_same_dim(s.dim(), f.dim(), "project");
    for (Eigen::Index j = 0; j < f.count(); ++j) {
      const UnitVector z(f.rows.col(j));
      f.rows.col(j) = (a.complement ? project_complement(s, z) : project(s, z)).coords();
    }
    write_embeddings(f, a.output);
    return kOk;
  }

  int cmd_invariance(const InvarianceArgs& a) {
    if (a.format != "csv" && a.format != "json") throw Error(ErrorKind::InvalidArgument, "--format must be csv or json");
    std::vector<Subspace> subs;
    for (const auto& p : a.subspaces) subs.push_back(read_subspace(p));
    const auto set = read_embeddings_any(a.input, warn_).to_set();
    const auto m = invariance_matrix(subs, set, a.row_normalize);
    if (a.format == "json") {
      nlohmann::json j;
      j["classes"] = m.classes;
      j["subspaces"] = m.row_names;
      j["row_normalized"] = m.row_normalized;
      nlohmann::json rows = nlohmann::json::array();
      for (Eigen::Index i = 0; i < m.values.rows(); ++i) rows.push_back(to_json(m.values.row(i).transpose()));
      j["values"] = rows;
      out_ << j.dump() << '\n';
    } else {
      out_ << "subspace";
      for (const auto& c : m.classes) out_ << ',' << c;
      out_ << '\n';
      for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
        out_ << m.row_names[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < m.values.cols(); ++j) out_ << ',' << format_real(m.values(i, j));
        out_ << '\n';
      }
    }
    return kOk;
  }

  int cmd_classify(const ClassifyArgs& a) {
    if (a.format != "json") throw Error(ErrorKind::InvalidArgument, "--format must be json");
    const auto images = read_embeddings_any(a.images, warn_).to_set();
    const auto labels = read_embeddings_any(a.labels, warn_);
    std::vector<std::string> names;
    if (labels.labels_present) {
      for (Eigen::Index j = 0; j < labels.count(); ++j) names.push_back(labels.class_of(j));
    } else if (static_cast<Eigen::Index>(labels.classes.size()) == labels.count()) {
      names = labels.classes;
    } else {
      throw Error(ErrorKind::LabelMismatch, "label file needs one class name per row");
    }
    for (std::size_t i = 0; i < names.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (names[i] == names[j]) throw Error(ErrorKind::LabelMismatch, "duplicate label '" + names[i] + "'");
      }
    }
    std::optional<Subspace> sub;
    if (!a.subspace.empty()) sub = read_subspace(a.subspace);
    ClassifyOptions co;
    co.dataset_name = a.name;
    co.with_probabilities = a.softmax;
    const auto rep = zero_shot_classify(images, labels.rows, names, sub, co);

    nlohmann::json j;
    j["dataset"] = rep.dataset_name;
    j["n_samples"] = rep.n_samples;
    j["top1"] = rep.top1;
    j["subspace"] = sub ? nlohmann::json(sub->class_name) : nlohmann::json(nullptr);
    nlohmann::json per = nlohmann::json::object();
    for (const auto& [name, acc] : rep.per_class) {
      per[name] = {{"correct", acc.correct}, {"total", acc.total}, {"accuracy", acc.accuracy()}};
    }
    j["per_class"] = per;
    j["predictions"] = rep.predictions;
    if (a.softmax) {
      nlohmann::json probs = nlohmann::json::array();
      for (const auto& p : rep.probabilities) probs.push_back(to_json(p));
      j["probabilities"] = probs;
    }
    out_ << j.dump() << '\n';
    return kOk;
  }

  int cmd_gen_synth(const SynthArgs& a) {
    PlantedOptions po;
    po.classes = a.classes;
    po.n = a.n;
    po.d = a.d;
    po.kappa = a.kappa;
    po.planted_k = a.planted_k;
    po.seed = a.seed;
    const auto fx = make_planted_fixture(po);
    write_embeddings(fx.set, a.output, DType::F64);
    nlohmann::json planted = nlohmann::json::array();
    for (int c = 0; c < a.classes; ++c) {
      write_subspace(planted_subspace(fx, po, c), planted_path(a.output, c));
      planted.push_back(planted_path(a.output, c));
    }
    nlohmann::json j;
    j["output"] = a.output;
    j["planted"] = planted;
    out_ << j.dump() << '\n';
    return kOk;
  }

  int cmd_compare(const CompareArgs& a) {
    check_lambda(a.lambda);
    if (a.k < 1) throw Error(ErrorKind::InvalidArgument, "--k must be >= 1");
    const auto set = read_embeddings_any(a.input, warn_).to_set();
    const std::size_t t = set.require_index(a.target);
    FitOptions fo;
    fo.center = !a.no_center;
    fo.class_balanced = !a.unweighted;
    const Geometry g = parse_geometry(a.geometry);
    const DataFrame frame = fit_frame(set, g, fo);
    const Matrix c = build_contrast_matrix(set, a.target, a.lambda, frame, fo.class_balanced).matrix;

    std::vector<std::pair<std::string, Subspace>> fitted;
    for (const auto& m : a.methods) {
      if (m == "ours") {
        fitted.emplace_back(m, subspace_from_contrast(c, a.k, frame, a.target, a.lambda, fo.class_balanced));
      } else if (m == "pca") {
        fitted.emplace_back(m, pca_baseline(set, a.target, a.k, Geometry::Euclidean, fo));
      } else if (m == "pga") {
        fitted.emplace_back(m, pca_baseline(set, a.target, a.k, Geometry::Sphere, fo));
      } else if (m == "fkt") {
        if (set.num_classes() != 2) throw Error(ErrorKind::InvalidArgument, "fkt needs exactly two classes");
        const auto y = frame_data(set, frame);
        fitted.emplace_back(m, fkt_baseline(y[t], y[1 - t], a.k, frame.base_point, a.target));
      } else if (m == "fda") {
        fitted.emplace_back(m, fda_baseline(set, a.k, g, fo));
      } else {
        throw Error(ErrorKind::InvalidArgument, "unknown method '" + m + "'");
      }
    }

    nlohmann::json methods = nlohmann::json::object();
    for (const auto& [name, s] : fitted) {
      methods[name] = {{"objective", objective_value(s.basis, c)}, {"eigenvalues", to_json(s.eigenvalues)}};
    }
    nlohmann::json angles = nlohmann::json::object();
    for (std::size_t i = 0; i < fitted.size(); ++i) {
      for (std::size_t j = i + 1; j < fitted.size(); ++j) {
        angles[fitted[i].first + "-" + fitted[j].first] = principal_angles(fitted[i].second.basis, fitted[j].second.basis);
      }
    }
    nlohmann::json j;
    j["target"] = a.target;
    j["k"] = a.k;
    j["lambda"] = a.lambda;
    j["geometry"] = a.geometry;
    j["methods"] = methods;
    j["angles"] = angles;
    out_ << j.dump() << '\n';
    return kOk;
  }

 private:
  std::ostream& out_;
  std::ostream& err_;
  WarningSink warn_;
};

/// Parses `args` (without the program name) and runs the chosen subcommand.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Class-contrastive subspaces of hypersphere embeddings", "pss"};
  app.require_subcommand(1);

  MeanArgs mean;
  auto* sc_mean = app.add_subcommand("mean", "Intrinsic mean of all embeddings in a file");
  sc_mean->add_option("--input", mean.input, "EMB1 or CSV input")->required();
  sc_mean->add_option("--tol", mean.tol, "Stationarity tolerance")->capture_default_str();
  sc_mean->add_option("--max-iter", mean.max_iter, "Iteration cap")->capture_default_str();
  sc_mean->add_option("--output", mean.output, "EMB1 output holding the mean")->required();

  FitArgs fit;
  auto* sc_fit = app.add_subcommand("fit", "Fit a class or theme subspace");
  sc_fit->add_option("--input", fit.input, "Labelled EMB1 or CSV input")->required();
  auto* o_target = sc_fit->add_option("--target", fit.target, "Target class");
  auto* o_theme = sc_fit->add_option("--theme", fit.theme, "EMB1 file of theme embeddings");
  o_target->excludes(o_theme);
  sc_fit->add_option("--lambda", fit.lambda, "Nuisance suppression weight in [0, 1]")->capture_default_str();
  sc_fit->add_option("--k", fit.k, "Subspace dimension")->capture_default_str();
  sc_fit->add_option("--geometry", fit.geometry, "sphere or euclidean")
      ->check(CLI::IsMember({"sphere", "euclidean"}))
      ->capture_default_str();
  sc_fit->add_flag("--no-center", fit.no_center, "Euclidean: skip pooled-mean centering");
  sc_fit->add_flag("--unweighted", fit.unweighted, "Do not weight classes by 1/n_j");
  sc_fit->add_option("--output", fit.output, "PSS1 output")->required();

  ProjectArgs proj;
  auto* sc_proj = app.add_subcommand("project", "Project embeddings onto a subspace or its complement");
  sc_proj->add_option("--subspace", proj.subspace, "PSS1 subspace")->required();
  sc_proj->add_option("--input", proj.input, "EMB1 or CSV input")->required();
  sc_proj->add_flag("--complement", proj.complement, "Use the orthogonal complement");
  sc_proj->add_option("--output", proj.output, "EMB1 output")->required();

  InvarianceArgs inv;
  auto* sc_inv = app.add_subcommand("invariance", "Class invariance matrix");
  sc_inv->add_option("--subspaces", inv.subspaces, "PSS1 subspaces (one row each)")->required();
  sc_inv->add_option("--input", inv.input, "Labelled EMB1 or CSV input")->required();
  sc_inv->add_flag("--row-normalize", inv.row_normalize, "Divide each row by its maximum");
  sc_inv->add_option("--format", inv.format, "csv or json")->capture_default_str();

  ClassifyArgs cls;
  auto* sc_cls = app.add_subcommand("classify", "Zero-shot nearest-label classification");
  sc_cls->add_option("--images", cls.images, "Labelled image EMB1")->required();
  sc_cls->add_option("--labels", cls.labels, "Label text EMB1, one row per label")->required();
  sc_cls->add_option("--subspace", cls.subspace, "Optional PSS1 subspace to project images onto");
  sc_cls->add_option("--format", cls.format, "json")->capture_default_str();
  sc_cls->add_option("--name", cls.name, "Dataset name in the report")->capture_default_str();
  sc_cls->add_flag("--softmax", cls.softmax, "Include per-image softmax probabilities");

  SynthArgs syn;
  auto* sc_syn = app.add_subcommand("gen-synth", "Generate a planted-subspace fixture");
  sc_syn->add_option("--classes", syn.classes)->capture_default_str();
  sc_syn->add_option("--n", syn.n, "Points per class")->capture_default_str();
  sc_syn->add_option("--d", syn.d)->capture_default_str();
  sc_syn->add_option("--kappa", syn.kappa)->capture_default_str();
  sc_syn->add_option("--planted-k", syn.planted_k)->capture_default_str();
  sc_syn->add_option("--seed", syn.seed)->capture_default_str();
  sc_syn->add_option("--output", syn.output, "EMB1 output")->required();

  CompareArgs cmp;
  std::string methods = "ours,pca,pga,fkt,fda";
  auto* sc_cmp = app.add_subcommand("compare", "Compare against PCA/PGA/FKT/FDA");
  sc_cmp->add_option("--input", cmp.input, "Labelled EMB1 or CSV input")->required();
  sc_cmp->add_option("--target", cmp.target, "Target class")->required();
  sc_cmp->add_option("--k", cmp.k)->capture_default_str();
  sc_cmp->add_option("--methods", methods, "Comma-separated subset of ours,pca,pga,fkt,fda")->capture_default_str();
  sc_cmp->add_option("--lambda", cmp.lambda)->capture_default_str();
  sc_cmp->add_option("--geometry", cmp.geometry)->check(CLI::IsMember({"sphere", "euclidean"}))->capture_default_str();
  sc_cmp->add_flag("--no-center", cmp.no_center);
  sc_cmp->add_flag("--unweighted", cmp.unweighted);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  App runner(out, err);
  try {
    if (sc_mean->parsed()) return runner.cmd_mean(mean);
    if (sc_fit->parsed()) return runner.cmd_fit(fit);
    if (sc_proj->parsed()) return runner.cmd_project(proj);
    if (sc_inv->parsed()) return runner.cmd_invariance(inv);
    if (sc_cls->parsed()) return runner.cmd_classify(cls);
    if (sc_syn->parsed()) return runner.cmd_gen_synth(syn);
    if (sc_cmp->parsed()) {
      cmp.methods.clear();
      std::stringstream ss(methods);
      for (std::string m; std::getline(ss, m, ',');) {
        if (!m.empty()) cmp.methods.push_back(m);
      }
      return runner.cmd_compare(cmp);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.category());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumeric;
  }
  return kUsage;
}

}  // namespace pss::cli
