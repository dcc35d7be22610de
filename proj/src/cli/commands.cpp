#include "cli/commands.hpp"

#include "clmkl/bounds.hpp"
#include "clmkl/clustering.hpp"
#include "clmkl/error.hpp"
#include "clmkl/evaluation.hpp"
#include "clmkl/kernel_io.hpp"
#include "clmkl/model_io.hpp"
#include "clmkl/pipeline.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace clmkl::cli {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parseDouble(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument("cannot parse " + what + " '" + text + "' as a number");
  }
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(text);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!text.empty() && text.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

KernelSpec parseSpec(const std::string& text) {
  const std::vector<std::string> parts = split(text, ':');
  const std::string& kind = parts.front();
  KernelSpec spec;
  if (kind == "linear" && parts.size() == 1) {
    spec = KernelSpec::linear();
  } else if (kind == "gaussian" && parts.size() == 2) {
    spec = KernelSpec::gaussian(parseDouble(parts[1], "gaussian width"));
  } else if (kind == "poly" && (parts.size() == 2 || parts.size() == 3)) {
    const double degree = parseDouble(parts[1], "polynomial degree");
    if (degree != static_cast<int>(degree)) throw InvalidArgument("polynomial degree must be an integer");
    spec = KernelSpec::polynomial(static_cast<int>(degree),
                                  parts.size() == 3 ? parseDouble(parts[2], "polynomial offset") : 0.0);
  } else if (kind == "chi2" && parts.size() <= 2) {
    spec = parts.size() == 2 ? KernelSpec::chiSquared(parseDouble(parts[1], "chi2 width"))
                             : KernelSpec::chiSquared();
  } else {
    throw InvalidArgument("invalid kernel spec '" + text +
                          "' (expected linear, gaussian:W, poly:D[:OFFSET] or chi2[:W])");
  }
  spec.validate();
  return spec;
}

nlohmann::json specJson(const KernelSpec& s) {
  nlohmann::json j;
  switch (s.kind) {
    case KernelSpec::Kind::linear: j["kind"] = "linear"; break;
    case KernelSpec::Kind::gaussian: j["kind"] = "gaussian"; break;
    case KernelSpec::Kind::polynomial:
      j["kind"] = "poly";
      j["degree"] = s.degree;
      j["offset"] = s.offset;
      break;
    case KernelSpec::Kind::chiSquared: j["kind"] = "chi2"; break;
  }
  if (s.width) j["width"] = *s.width;
  return j;
}

GramMatrix loadNamedKernel(const NamedPath& k) {
  if (!std::filesystem::exists(k.path))
    throw IoError("kernel '" + k.name + "': file " + k.path.string() + " does not exist");
  try {
    return loadKernelMatrix(k.path);
  } catch (const Error& e) {
    throw FormatError("kernel '" + k.name + "': " + e.what());
  }
}

KernelBundle loadBundle(const std::vector<NamedPath>& kernels) {
  if (kernels.empty()) throw InvalidArgument("at least one --kernel NAME=PATH is required");
  std::vector<GramMatrix> mats;
  std::vector<std::string> names;
  for (const auto& k : kernels) {
    mats.push_back(loadNamedKernel(k));
    names.push_back(k.name);
  }
  return KernelBundle(std::move(mats), std::move(names));
}

struct ClusterKernel {
  std::optional<GramMatrix> kernel;
  std::string name;
};

ClusterKernel resolveClusterKernel(const std::optional<std::string>& arg, const KernelBundle& bundle) {
  ClusterKernel out;
  if (!arg) return out;
  if (arg->find('=') == std::string::npos) {
    const auto idx = bundle.indexOf(*arg);
    if (!idx) throw InvalidArgument("clustering kernel '" + *arg + "' is not one of the --kernel names");
    out.kernel = bundle[*idx];
    out.name = *arg;
    return out;
  }
  const NamedPath np = parseNamedPath(*arg);
  out.kernel = loadNamedKernel(np);
  out.name = np.name;
  return out;
}

FitOptions fitOptions(const TrainConfig& c) {
  FitOptions o;
  o.method = parseMethod(c.algorithm);
  o.C = c.C;
  o.p = c.p;
  o.clusters = o.method == Method::clmkl ? c.clusters : 1;
  o.evenness = c.evenness;
  o.tau = c.tau;
  if (c.loss == "hinge") o.loss = Loss::hinge();
  else if (c.loss == "eps") o.loss = Loss::epsInsensitive(c.epsilon);
  else throw InvalidArgument("unknown loss '" + c.loss + "' (expected hinge or eps)");
  if (o.loss.kind == LossKind::epsInsensitive && !(c.epsilon >= 0.0))
    throw InvalidArgument("epsilon must be nonnegative");
  o.gapTolerance = c.gapTolerance;
  o.maxOuterIterations = c.maxIterations;
  o.restarts = c.restarts;
  o.seed = c.seed;
  o.normalization = parseNormalizationMode(c.normalization);
  o.lmklSteps = c.lmklSteps;
  return o;
}

std::string reportCsv(const FittedModel& model) {
  std::ostringstream os;
  if (model.lmkl) {
    os << "iteration,objective\n";
    const auto& h = model.lmklReport.objectiveHistory;
    for (std::size_t t = 0; t < h.size(); ++t) os << t << ',' << fmt(h[t]) << '\n';
    return os.str();
  }
  os << "model,iteration,primal,dual,gap\n";
  for (std::size_t k = 0; k < model.reports.size(); ++k) {
    const TrainReport& r = model.reports[k];
    for (std::size_t t = 0; t < r.primalHistory.size(); ++t)
      os << k << ',' << t << ',' << fmt(r.primalHistory[t]) << ',' << fmt(r.dualHistory[t]) << ','
         << fmt(r.gapHistory[t]) << '\n';
  }
  return os.str();
}

const NamedPath* findNamed(const std::vector<NamedPath>& list, const std::string& name) {
  for (const auto& x : list)
    if (x.name == name) return &x;
  return nullptr;
}

struct PredictionFile {
  Vector decision;
  Vector label;
};

PredictionFile readPredictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open predictions file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("bad format: predictions file is empty");
  const std::vector<std::string> header = split(trim(line), ',');
  int dcol = -1;
  int lcol = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "decision") dcol = static_cast<int>(i);
    if (header[i] == "label") lcol = static_cast<int>(i);
  }
  if (dcol < 0 || lcol < 0) throw FormatError("bad format: predictions need 'decision' and 'label' columns");
  std::vector<double> d;
  std::vector<double> l;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    const std::vector<std::string> cells = split(line, ',');
    if (cells.size() != header.size()) throw FormatError("bad format: ragged predictions row");
    d.push_back(parseDouble(cells[static_cast<std::size_t>(dcol)], "decision value"));
    l.push_back(parseDouble(cells[static_cast<std::size_t>(lcol)], "label"));
  }
  PredictionFile out;
  out.decision = Eigen::Map<Vector>(d.data(), static_cast<Index>(d.size()));
  out.label = Eigen::Map<Vector>(l.data(), static_cast<Index>(l.size()));
  return out;
}

}  // namespace

NamedPath parseNamedPath(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == text.size())
    throw InvalidArgument("expected NAME=PATH, got '" + text + "'");
  return {text.substr(0, eq), text.substr(eq + 1)};
}

Vector readLabels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open labels file " + path.string());
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    values.push_back(parseDouble(line, "label"));
  }
  if (values.empty()) throw FormatError("bad format: labels file " + path.string() + " is empty");
  return Eigen::Map<Vector>(values.data(), static_cast<Index>(values.size()));
}

int cmdComputeKernels(const ComputeKernelsConfig& config, std::ostream& out) {
  if (config.specs.empty()) throw InvalidArgument("at least one --spec NAME=SPEC is required");
  std::vector<std::pair<std::string, KernelSpec>> specs;
  std::set<std::string> seen;
  for (const auto& s : config.specs) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw InvalidArgument("expected NAME=SPEC, got '" + s + "'");
    const std::string name = s.substr(0, eq);
    if (!seen.insert(name).second) throw InvalidArgument("duplicate kernel name '" + name + "'");
    specs.emplace_back(name, parseSpec(s.substr(eq + 1)));
  }
  const Matrix train = readCsvMatrix(config.features);
  std::optional<Matrix> test;
  if (config.testFeatures) {
    test = readCsvMatrix(*config.testFeatures);
    if (test->cols() != train.cols()) throw DimensionMismatch("test features have a different dimension");
  }
  std::filesystem::create_directories(config.outDir);

  nlohmann::json manifest;
  manifest["points"] = train.rows();
  manifest["kernels"] = nlohmann::json::array();
  for (const auto& [name, raw] : specs) {
    const KernelSpec spec = resolveSpec(raw, train);
    const std::string file = name + ".kmx";
    storeKernelMatrix(computeGram(train, spec), config.outDir / file);
    nlohmann::json entry = {{"name", name}, {"file", file}, {"spec", specJson(spec)}};
    if (test) {
      const CrossKernelMatrix cross = computeCross(*test, train, spec);
      entry["cross"] = name + ".cross.kmx";
      entry["testDiag"] = name + ".diag.kmx";
      storeCrossKernel(cross, config.outDir / (name + ".cross.kmx"), config.outDir / (name + ".diag.kmx"));
    }
    manifest["kernels"].push_back(entry);
    out << "wrote " << (config.outDir / file).string() << '\n';
  }
  if (test) manifest["testPoints"] = test->rows();
  writeFileAtomic(config.outDir / "manifest.json", manifest.dump(1) + "\n");
  return kSuccess;
}

int cmdCluster(const ClusterConfig& config, std::ostream& out) {
  if (config.evenness && config.tau) throw InvalidArgument("give either --evenness or --tau, not both");
  const GramMatrix raw = loadNamedKernel(config.kernel);
  const NormalizationMode mode = parseNormalizationMode(config.normalization);
  const GramMatrix k0 = Normalization::fit(mode, raw).apply(raw);
  KMeansOptions km;
  km.clusters = config.clusters;
  km.restarts = config.restarts;
  km.seed = config.seed;
  const ClusterAssignment assignment = kernelKMeans(k0, km);
  LikelihoodModel model = LikelihoodModel::build(k0, assignment, config.kernel.name);
  const Matrix dist = trainDistanceSq(k0, model);
  std::optional<TauCalibration> cal;
  if (config.evenness) {
    cal = calibrateTau(dist, *config.evenness);
    model.tau = cal->tau;
  } else {
    model.tau = config.tau.value_or(kHardAssignment);
  }
  writeFileAtomic(config.out, clusteringToJson(assignment, model, cal ? &*cal : nullptr));
  out << "clusters = " << config.clusters << "\n";
  out << "clustering_error = " << fmt(assignment.clusteringError) << "\n";
  out << "tau = " << (std::isinf(model.tau) ? std::string("inf") : fmt(model.tau)) << "\n";
  out << "evenness = " << fmt(averageEvenness(dist, model.tau)) << "\n";
  if (cal && !cal->reachable) out << "warning: target evenness not reachable; using the nearest endpoint\n";
  return kSuccess;
}

int cmdTrain(const TrainConfig& config, std::ostream& out) {
  const FitOptions options = fitOptions(config);
  const KernelBundle bundle = loadBundle(config.kernels);
  const ClusterKernel ck = resolveClusterKernel(config.clusterKernel, bundle);
  FitOptions o = options;
  if (ck.kernel) o.clusterKernelName = ck.name;
  const Vector targets = readLabels(config.labels);
  if (targets.size() != bundle.points())
    throw DimensionMismatch("labels file has " + std::to_string(targets.size()) + " entries, kernels have " +
                            std::to_string(bundle.points()) + " points");
  const FittedModel model = fitModel(bundle, ck.kernel ? &*ck.kernel : nullptr, targets, o);
  saveModel(model, config.model);
  if (config.report) writeFileAtomic(*config.report, reportCsv(model));
  out << "wrote " << config.model.string() << "\n";
  if (!model.converged()) {
    out << "warning: training did not converge; the model is flagged as not converged\n";
    return kNotConverged;
  }
  return kSuccess;
}

int cmdPredict(const PredictConfig& config, std::ostream& out) {
  const FittedModel model = loadModel(config.model);
  std::vector<CrossKernelMatrix> cross;
  for (const auto& name : model.kernelNames()) {
    const NamedPath* c = findNamed(config.cross, name);
    if (c == nullptr) throw InvalidArgument("missing --cross for kernel '" + name + "'");
    const NamedPath* d = findNamed(config.testDiag, name);
    if (d == nullptr) throw InvalidArgument("missing --test-diag for kernel '" + name + "'");
    if (!std::filesystem::exists(c->path))
      throw IoError("kernel '" + name + "': file " + c->path.string() + " does not exist");
    if (!std::filesystem::exists(d->path))
      throw IoError("kernel '" + name + "': file " + d->path.string() + " does not exist");
    cross.push_back(loadCrossKernel(c->path, d->path));
  }
  std::optional<CrossKernelMatrix> k0;
  if (model.needsClusterKernel()) {
    if (!config.clusterCross || !config.clusterTestDiag)
      throw InvalidArgument("model needs --cluster-cross and --cluster-test-diag for clustering kernel '" +
                            model.clusterKernelName + "'");
    k0 = loadCrossKernel(*config.clusterCross, *config.clusterTestDiag);
  }
  const Matrix decisions = predictFitted(model, cross, k0 ? &*k0 : nullptr);
  const Vector labels = labelsFromDecisions(model, decisions);

  std::ostringstream os;
  os << "index,decision,label";
  const bool multi = decisions.cols() > 1;
  if (multi)
    for (int c : model.classes) os << ",decision_" << c;
  os << '\n';
  for (Index i = 0; i < decisions.rows(); ++i) {
    os << i << ',' << fmt(decisions.row(i).maxCoeff()) << ',' << fmt(labels(i));
    if (multi)
      for (Index k = 0; k < decisions.cols(); ++k) os << ',' << fmt(decisions(i, k));
    os << '\n';
  }
  writeFileAtomic(config.out, os.str());
  out << "wrote " << decisions.rows() << " predictions to " << config.out.string() << "\n";
  return kSuccess;
}

int cmdEvaluate(const EvaluateConfig& config, std::ostream& out) {
  const PredictionFile pred = readPredictions(config.predictions);
  const Vector truth = readLabels(config.labels);
  if (truth.size() != pred.label.size())
    throw DimensionMismatch("predictions and labels have different lengths");
  const Metric metric = parseMetric(config.metric);
  const double value = metric == Metric::accuracy ? accuracy(pred.label, truth) : auc(pred.decision, truth);
  out << toString(metric) << " = " << fmt(value) << "\n";
  return kSuccess;
}

int cmdCv(const CvConfig& config, std::ostream& out) {
  const FitOptions base = fitOptions(config.train);
  const KernelBundle bundle = loadBundle(config.train.kernels);
  const ClusterKernel ck = resolveClusterKernel(config.train.clusterKernel, bundle);
  const Vector targets = readLabels(config.train.labels);
  if (targets.size() != bundle.points()) throw DimensionMismatch("labels and kernels differ in point count");

  Grid grid;
  grid.Cs = config.Cs.empty() ? Grid::defaultCs() : config.Cs;
  grid.ps = config.ps;
  grid.ls = config.ls;
  grid.evenness = Grid::evennessTargets(config.evennessLo, config.evennessHi, config.evennessCount);
  CvOptions options;
  options.folds = config.folds;
  options.seed = config.train.seed;
  options.metric = parseMetric(config.metric);
  options.base = base;
  if (ck.kernel) options.base.clusterKernelName = ck.name;
  const CvResult result = crossValidate(bundle, ck.kernel ? &*ck.kernel : nullptr, targets, grid, options);
  if (config.out) writeFileAtomic(*config.out, cvCsv(result));
  out << "best_C = " << fmt(result.best.C) << "\n";
  out << "best_p = " << fmt(result.best.p) << "\n";
  out << "best_l = " << result.best.clusters << "\n";
  out << "best_evenness = " << fmt(result.best.evenness) << "\n";
  out << "mean_" << toString(options.metric) << " = " << fmt(result.bestMean) << "\n";
  return kSuccess;
}

int cmdBound(const BoundConfig& config, std::ostream& out) {
  KernelBundle bundle = loadBundle(config.kernels);
  BoundInputs in;
  in.p = config.p;
  in.lossBound = config.lossBound;
  in.lipschitz = config.lipschitz;
  in.delta = config.delta;
  const Index n = bundle.points();

  std::optional<double> radius = config.radius;
  if (config.model) {
    const FittedModel model = loadModel(*config.model);
    if (model.lmkl) throw InvalidArgument("bounds apply to clmkl, mkl and unif-svm models only");
    if (model.trainPoints() != n) throw DimensionMismatch("model and kernels differ in point count");
    std::vector<GramMatrix> normalized;
    const auto names = model.kernelNames();
    if (names.size() != bundle.count()) throw DimensionMismatch("model and kernels differ in kernel count");
    for (std::size_t m = 0; m < bundle.count(); ++m) {
      const auto idx = bundle.indexOf(names[m]);
      if (!idx) throw InvalidArgument("missing --kernel for '" + names[m] + "'");
      normalized.push_back(model.kernelNormalizations[m].apply(bundle[*idx]));
    }
    bundle = KernelBundle(std::move(normalized), names);
    in.p = model.models.front().p;
    if (!radius) {
      double r = 0.0;
      for (const auto& m : model.models) r = std::max(r, estimateRadius(m.weightNormsSq, m.p));
      radius = r;
    }
    if (config.assignment == "model") in.likelihoods = model.models.front().trainLikelihoods;
  } else {
    const NormalizationMode mode = parseNormalizationMode(config.normalization);
    std::vector<GramMatrix> normalized;
    for (const auto& k : bundle.kernels()) normalized.push_back(Normalization::fit(mode, k).apply(k));
    bundle = KernelBundle(std::move(normalized), bundle.names());
  }
  if (config.assignment == "uniform") {
    in.likelihoods = LikelihoodMatrix::uniform(n, config.clusters).values();
  } else if (config.assignment == "hard") {
    const ClusterKernel ck = resolveClusterKernel(config.clusterKernel, bundle);
    if (!ck.kernel) throw InvalidArgument("--assignment hard needs --cluster-kernel");
    KMeansOptions km;
    km.clusters = config.clusters;
    km.restarts = config.restarts;
    km.seed = config.seed;
    in.likelihoods = LikelihoodMatrix::hard(kernelKMeans(*ck.kernel, km).labels, config.clusters).values();
  } else if (config.assignment == "model") {
    if (!config.model) throw InvalidArgument("--assignment model needs --model");
  } else {
    throw InvalidArgument("unknown assignment '" + config.assignment + "' (expected uniform, hard or model)");
  }
  if (!radius) throw InvalidArgument("--radius is required unless --model is given");
  in.radius = *radius;

  in.kernelDiagonals.resize(static_cast<Index>(bundle.count()), n);
  for (std::size_t m = 0; m < bundle.count(); ++m)
    in.kernelDiagonals.row(static_cast<Index>(m)) = bundle[m].diagonal().transpose();
  in.kernelBound = config.kernelBound.value_or(in.kernelDiagonals.maxCoeff());

  const BoundReport r = computeBounds(in, config.risk);
  out << "n = " << n << "\n";
  out << "kernels = " << bundle.count() << "\n";
  out << "clusters = " << in.likelihoods.cols() << "\n";
  out << "p = " << fmt(in.p) << "\n";
  out << "radius = " << fmt(in.radius) << "\n";
  out << "kernel_bound = " << fmt(in.kernelBound) << "\n";
  out << "likelihood_mass = " << fmt(r.likelihoodMass) << "\n";
  out << "optimal_t = " << fmt(r.optimalT) << "\n";
  out << "regime = " << toString(r.regime) << "\n";
  out << "rademacher_exact = " << fmt(r.rademacherExact) << "\n";
  out << "rademacher_simplified = " << fmt(r.rademacherSimplified) << "\n";
  out << "confidence_term = " << fmt(r.confidenceTerm) << "\n";
  out << "generalization_bound = " << fmt(r.genBound) << "\n";
  if (config.csv) {
    std::ostringstream os;
    os << "n,M,l,p,D,B,likelihood_mass,optimal_t,regime,rademacher_exact,rademacher_simplified,"
          "confidence_term,generalization_bound\n";
    os << n << ',' << bundle.count() << ',' << in.likelihoods.cols() << ',' << fmt(in.p) << ','
       << fmt(in.radius) << ',' << fmt(in.kernelBound) << ',' << fmt(r.likelihoodMass) << ','
       << fmt(r.optimalT) << ',' << toString(r.regime) << ',' << fmt(r.rademacherExact) << ','
       << fmt(r.rademacherSimplified) << ',' << fmt(r.confidenceTerm) << ',' << fmt(r.genBound) << '\n';
    writeFileAtomic(*config.csv, os.str());
  }
  return kSuccess;
}

}  // namespace clmkl::cli
