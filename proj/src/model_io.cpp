#include "clmkl/model_io.hpp"

#include "clmkl/error.hpp"
#include "clmkl/kernel_io.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace clmkl {

using nlohmann::json;

namespace {

json toJson(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json toJson(const Matrix& m) {
  json out = json::array();
  for (Index i = 0; i < m.rows(); ++i) out.push_back(toJson(Vector(m.row(i).transpose())));
  return out;
}

Vector vectorFrom(const json& j) {
  if (!j.is_array()) throw FormatError("bad format: expected a number array");
  Vector out(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) out(static_cast<Index>(i)) = j[i].get<double>();
  return out;
}

Matrix matrixFrom(const json& j, Index cols) {
  if (!j.is_array()) throw FormatError("bad format: expected an array of rows");
  Matrix out(static_cast<Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Vector row = vectorFrom(j[i]);
    if (row.size() != cols) throw FormatError("bad format: ragged matrix");
    out.row(static_cast<Index>(i)) = row.transpose();
  }
  return out;
}

json tauToJson(double tau) { return std::isinf(tau) ? json("inf") : json(tau); }

double tauFrom(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return kHardAssignment;
    throw FormatError("bad format: tau must be a number or \"inf\"");
  }
  return j.get<double>();
}

json toJson(const Normalization& n) {
  return {{"mode", toString(n.mode)}, {"scale", n.scale}, {"trainDiagonal", toJson(n.trainDiagonal)}};
}

Normalization normalizationFrom(const json& j) {
  Normalization n;
  n.mode = parseNormalizationMode(j.at("mode").get<std::string>());
  n.scale = j.at("scale").get<double>();
  n.trainDiagonal = vectorFrom(j.at("trainDiagonal"));
  return n;
}

json toJson(const LikelihoodModel& l) {
  json sets = json::array();
  for (const auto& s : l.memberSets) sets.push_back(s);
  return {{"memberSets", sets},
          {"tau", tauToJson(l.tau)},
          {"clusteringKernel", l.clusteringKernelId},
          {"intraClusterTerm", toJson(l.intraClusterTerm)},
          {"trainPoints", l.trainPoints}};
}

LikelihoodModel likelihoodFrom(const json& j) {
  LikelihoodModel l;
  for (const auto& s : j.at("memberSets")) l.memberSets.push_back(s.get<std::vector<Index>>());
  l.tau = tauFrom(j.at("tau"));
  l.clusteringKernelId = j.at("clusteringKernel").get<std::string>();
  l.intraClusterTerm = vectorFrom(j.at("intraClusterTerm"));
  l.trainPoints = j.at("trainPoints").get<Index>();
  l.validate();
  return l;
}

json toJson(const ClmklModel& m, const TrainReport& r) {
  return {{"algorithm", toString(m.algorithm)},
          {"p", m.p},
          {"C", m.C},
          {"bias", m.bias},
          {"alpha", toJson(m.alpha)},
          {"targets", toJson(m.targets)},
          {"beta", toJson(m.weights.beta)},
          {"trainLikelihoods", toJson(m.trainLikelihoods)},
          {"weightNormsSq", toJson(m.weightNormsSq)},
          {"likelihood", toJson(m.likelihood)},
          {"kernelNames", m.kernelNames},
          {"converged", r.converged},
          {"outerIterations", r.outerIterations},
          {"finalGap", r.gapHistory.empty() ? 0.0 : r.gapHistory.back()},
          {"resetClusters", r.resetClusters}};
}

ClmklModel clmklFrom(const json& j, const Loss& loss, TrainReport& report) {
  ClmklModel m;
  m.algorithm = parseAlgorithm(j.at("algorithm").get<std::string>());
  m.p = j.at("p").get<double>();
  m.C = j.at("C").get<double>();
  m.bias = j.at("bias").get<double>();
  m.alpha = vectorFrom(j.at("alpha"));
  m.targets = vectorFrom(j.at("targets"));
  m.kernelNames = j.at("kernelNames").get<std::vector<std::string>>();
  const auto M = static_cast<Index>(m.kernelNames.size());
  m.weights.beta = matrixFrom(j.at("beta"), M);
  m.weightNormsSq = matrixFrom(j.at("weightNormsSq"), M);
  m.likelihood = likelihoodFrom(j.at("likelihood"));
  m.trainLikelihoods = matrixFrom(j.at("trainLikelihoods"), m.likelihood.clusters());
  m.loss = loss;
  if (m.alpha.size() != m.targets.size() || m.trainLikelihoods.rows() != m.alpha.size() ||
      m.weights.beta.rows() != m.likelihood.clusters())
    throw FormatError("bad format: inconsistent model dimensions");
  report.converged = j.at("converged").get<bool>();
  report.outerIterations = j.at("outerIterations").get<int>();
  report.gapHistory = {j.at("finalGap").get<double>()};
  report.resetClusters = j.at("resetClusters").get<std::vector<int>>();
  return m;
}

json toJson(const LmklModel& m, const LmklReport& r) {
  return {{"gatingCoefficients", toJson(m.gating.coefficients)},
          {"gatingBias", toJson(m.gating.bias)},
          {"clusteringKernel", m.gating.clusteringKernelId},
          {"trainGating", toJson(m.trainGating)},
          {"alpha", toJson(m.alpha)},
          {"labels", toJson(m.labels)},
          {"bias", m.bias},
          {"C", m.C},
          {"kernelNames", m.kernelNames},
          {"objectiveHistory", r.objectiveHistory},
          {"bestIteration", r.bestIteration},
          {"stalled", r.stalled}};
}

LmklModel lmklFrom(const json& j, LmklReport& report) {
  LmklModel m;
  m.kernelNames = j.at("kernelNames").get<std::vector<std::string>>();
  const auto M = static_cast<Index>(m.kernelNames.size());
  m.gating.coefficients = matrixFrom(j.at("gatingCoefficients"), M);
  m.gating.bias = vectorFrom(j.at("gatingBias"));
  m.gating.clusteringKernelId = j.at("clusteringKernel").get<std::string>();
  m.trainGating = matrixFrom(j.at("trainGating"), M);
  m.alpha = vectorFrom(j.at("alpha"));
  m.labels = vectorFrom(j.at("labels"));
  m.bias = j.at("bias").get<double>();
  m.C = j.at("C").get<double>();
  if (m.gating.bias.size() != M || m.alpha.size() != m.labels.size() ||
      m.gating.coefficients.rows() != m.alpha.size() || m.trainGating.rows() != m.alpha.size())
    throw FormatError("bad format: inconsistent LMKL model dimensions");
  report.objectiveHistory = j.at("objectiveHistory").get<std::vector<double>>();
  report.bestIteration = j.at("bestIteration").get<int>();
  report.stalled = j.at("stalled").get<bool>();
  return m;
}

}  // namespace

std::string modelToJson(const FittedModel& model) {
  json j;
  j["format"] = "clmkl-model";
  j["version"] = kModelFormatVersion;
  j["schema"] = model.lmkl ? "lmkl" : "clmkl";
  j["method"] = toString(model.method);
  j["seed"] = model.seed;
  j["loss"] = {{"kind", model.loss.kind == LossKind::hinge ? "hinge" : "eps-insensitive"},
               {"epsilon", model.loss.epsilon}};
  j["normalization"] = toString(model.normalization);
  j["converged"] = model.converged();
  json kernels = json::array();
  const auto names = model.kernelNames();
  for (std::size_t m = 0; m < names.size(); ++m)
    kernels.push_back({{"name", names[m]}, {"normalization", toJson(model.kernelNormalizations.at(m))}});
  j["kernels"] = kernels;
  if (model.clusterNormalization)
    j["clusterKernel"] = {{"name", model.clusterKernelName},
                          {"normalization", toJson(*model.clusterNormalization)}};
  else
    j["clusterKernel"] = nullptr;
  j["classes"] = model.classes;
  if (model.calibration)
    j["calibration"] = {{"tau", tauToJson(model.calibration->tau)},
                        {"evenness", model.calibration->evenness},
                        {"reachable", model.calibration->reachable}};
  if (model.assignment) j["clusteringError"] = model.assignment->clusteringError;
  if (model.lmkl) {
    j["lmkl"] = toJson(*model.lmkl, model.lmklReport);
  } else {
    json models = json::array();
    for (std::size_t k = 0; k < model.models.size(); ++k)
      models.push_back(toJson(model.models[k], model.reports.at(k)));
    j["models"] = models;
  }
  return j.dump(1) + "\n";
}

FittedModel modelFromJson(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("bad format: model is not valid JSON: ") + e.what());
  }
  try {
    if (j.value("format", "") != "clmkl-model") throw FormatError("bad format: not a model file");
    if (j.at("version").get<int>() != kModelFormatVersion)
      throw FormatError("bad format: unsupported model version " + j.at("version").dump());
    const std::string schema = j.at("schema").get<std::string>();
    if (schema != "clmkl" && schema != "lmkl") throw FormatError("bad format: unknown schema '" + schema + "'");

    FittedModel model;
    model.method = parseMethod(j.at("method").get<std::string>());
    if ((schema == "lmkl") != (model.method == Method::lmkl))
      throw FormatError("bad format: schema '" + schema + "' does not match algorithm " + toString(model.method));
    model.seed = j.at("seed").get<std::uint64_t>();
    const std::string lossKind = j.at("loss").at("kind").get<std::string>();
    model.loss = lossKind == "hinge" ? Loss::hinge() : Loss::epsInsensitive(j.at("loss").at("epsilon").get<double>());
    model.normalization = parseNormalizationMode(j.at("normalization").get<std::string>());
    for (const auto& k : j.at("kernels")) model.kernelNormalizations.push_back(normalizationFrom(k.at("normalization")));
    if (!j.at("clusterKernel").is_null()) {
      model.clusterKernelName = j["clusterKernel"].at("name").get<std::string>();
      model.clusterNormalization = normalizationFrom(j["clusterKernel"].at("normalization"));
    }
    model.classes = j.at("classes").get<std::vector<int>>();
    if (j.contains("calibration")) {
      TauCalibration c;
      c.tau = tauFrom(j["calibration"].at("tau"));
      c.evenness = j["calibration"].at("evenness").get<double>();
      c.reachable = j["calibration"].at("reachable").get<bool>();
      model.calibration = c;
    }
    if (j.contains("clusteringError")) {
      ClusterAssignment a;
      a.clusteringError = j["clusteringError"].get<double>();
      model.assignment = a;
    }
    if (schema == "lmkl") {
      model.lmkl = lmklFrom(j.at("lmkl"), model.lmklReport);
    } else {
      for (const auto& m : j.at("models")) {
        TrainReport r;
        model.models.push_back(clmklFrom(m, model.loss, r));
        model.reports.push_back(std::move(r));
      }
      if (model.models.empty()) throw FormatError("bad format: model holds no classifiers");
    }
    if (model.kernelNormalizations.size() != model.kernelNames().size())
      throw FormatError("bad format: kernel list does not match the model");
    return model;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad format: ") + e.what());
  }
}

void saveModel(const FittedModel& model, const std::filesystem::path& path) {
  writeFileAtomic(path, modelToJson(model));
}

FittedModel loadModel(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return modelFromJson(buf.str());
}

std::string clusteringToJson(const ClusterAssignment& assignment, const LikelihoodModel& likelihood,
                             const TauCalibration* calibration) {
  json j = toJson(likelihood);
  j["labels"] = assignment.labels;
  j["clusteringError"] = assignment.clusteringError;
  j["errorTrace"] = assignment.errorTrace;
  if (calibration != nullptr) {
    j["evenness"] = calibration->evenness;
    j["reachable"] = calibration->reachable;
  }
  return j.dump(1) + "\n";
}

}  // namespace clmkl
