#include "cli/commands.hpp"

#include "clmkl/error.hpp"

#include <CLI11.hpp>

namespace clmkl::cli {

namespace {

// CLI11 options that may be absent; copied into std::optional after parsing.
struct OptionalDouble {
  double value = 0.0;
  CLI::Option* option = nullptr;

  std::optional<double> get() const {
    return option != nullptr && option->count() > 0 ? std::optional<double>(value) : std::nullopt;
  }
};

struct OptionalString {
  std::string value;
  CLI::Option* option = nullptr;

  std::optional<std::string> get() const {
    return option != nullptr && option->count() > 0 ? std::optional<std::string>(value) : std::nullopt;
  }
};

std::vector<NamedPath> namedPaths(const std::vector<std::string>& args) {
  std::vector<NamedPath> out;
  for (const auto& a : args) out.push_back(parseNamedPath(a));
  return out;
}

// Options shared by train and cv.
struct TrainArgs {
  std::vector<std::string> kernels;
  OptionalString clusterKernel;
  std::string labels;
  OptionalDouble evenness;
  OptionalDouble tau;
  std::uint64_t seed = 0;
  TrainConfig config;

  void add(CLI::App* cmd) {
    cmd->add_option("--kernel", kernels, "Base kernel NAME=PATH (repeatable)")->required();
    clusterKernel.option = cmd->add_option("--cluster-kernel", clusterKernel.value,
                                           "Clustering kernel NAME=PATH or the NAME of a --kernel");
    cmd->add_option("--labels", labels, "Labels file, one value per line")->required();
    cmd->add_option("--algorithm", config.algorithm, "clmkl, mkl, lmkl or unif-svm")->capture_default_str();
    cmd->add_option("--C", config.C, "Regularization constant")->capture_default_str();
    cmd->add_option("--p", config.p, "Norm parameter p >= 1")->capture_default_str();
    cmd->add_option("--clusters", config.clusters, "Number of clusters l")->capture_default_str();
    evenness.option = cmd->add_option("--evenness", evenness.value, "Target average evenness in (1/l, 1]");
    tau.option = cmd->add_option("--tau", tau.value, "Likelihood temperature (default: hard assignment)");
    cmd->add_option("--loss", config.loss, "hinge or eps")->capture_default_str();
    cmd->add_option("--epsilon", config.epsilon, "Tube width of the eps-insensitive loss")->capture_default_str();
    cmd->add_option("--gap-tol", config.gapTolerance, "Relative duality gap tolerance")->capture_default_str();
    cmd->add_option("--max-iter", config.maxIterations, "Outer iteration cap")->capture_default_str();
    cmd->add_option("--restarts", config.restarts, "k-means restarts")->capture_default_str();
    cmd->add_option("--seed", seed, "Base random seed")->capture_default_str();
    cmd->add_option("--normalization", config.normalization, "none, multiplicative or trace")
        ->capture_default_str();
    cmd->add_option("--lmkl-steps", config.lmklSteps, "LMKL outer iterations")->capture_default_str();
  }

  TrainConfig finish() {
    config.kernels = namedPaths(kernels);
    config.clusterKernel = clusterKernel.get();
    config.labels = labels;
    config.evenness = evenness.get();
    config.tau = tau.get();
    config.seed = seed;
    return config;
  }
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Convex localized multiple kernel learning"};
  app.set_config("--config", "", "TOML-style file with a [command] section per subcommand; flags take precedence");
  app.require_subcommand(1);

  // compute-kernels
  ComputeKernelsConfig ck;
  std::string ckFeatures, ckOut;
  OptionalString ckTest;
  auto* computeCmd = app.add_subcommand("compute-kernels", "Compute KMX1 kernel files from a feature CSV");
  computeCmd->add_option("--features", ckFeatures, "Training features, one point per row")->required();
  ckTest.option = computeCmd->add_option("--test-features", ckTest.value, "Test features for cross kernels");
  computeCmd->add_option("--spec", ck.specs, "NAME=SPEC (repeatable)")->required();
  computeCmd->add_option("--out-dir", ckOut, "Output directory")->required();

  // cluster
  ClusterConfig cl;
  std::string clKernel, clOut;
  OptionalDouble clEvenness, clTau;
  auto* clusterCmd = app.add_subcommand("cluster", "Kernel k-means and likelihood calibration");
  clusterCmd->add_option("--kernel", clKernel, "Clustering kernel NAME=PATH")->required();
  clusterCmd->add_option("--clusters", cl.clusters, "Number of clusters l")->capture_default_str();
  clEvenness.option = clusterCmd->add_option("--evenness", clEvenness.value, "Target average evenness");
  clTau.option = clusterCmd->add_option("--tau", clTau.value, "Likelihood temperature");
  clusterCmd->add_option("--restarts", cl.restarts, "k-means restarts")->capture_default_str();
  clusterCmd->add_option("--seed", cl.seed, "Base random seed")->capture_default_str();
  clusterCmd->add_option("--normalization", cl.normalization, "none, multiplicative or trace")
      ->capture_default_str();
  clusterCmd->add_option("--out", clOut, "Output JSON")->required();

  // train
  TrainArgs tr;
  std::string trModel;
  OptionalString trReport;
  auto* trainCmd = app.add_subcommand("train", "Train a model");
  tr.add(trainCmd);
  trainCmd->add_option("--model", trModel, "Output model JSON")->required();
  trReport.option = trainCmd->add_option("--report", trReport.value, "Per-iteration report CSV");

  // predict
  PredictConfig pr;
  std::string prModel, prOut;
  std::vector<std::string> prCross, prDiag;
  OptionalString prClusterCross, prClusterDiag;
  auto* predictCmd = app.add_subcommand("predict", "Decision values and labels for new points");
  predictCmd->add_option("--model", prModel, "Model JSON")->required();
  predictCmd->add_option("--cross", prCross, "Cross kernel NAME=PATH (repeatable)")->required();
  predictCmd->add_option("--test-diag", prDiag, "Test self-evaluations NAME=PATH (repeatable)")->required();
  prClusterCross.option = predictCmd->add_option("--cluster-cross", prClusterCross.value,
                                                 "Clustering kernel cross matrix");
  prClusterDiag.option = predictCmd->add_option("--cluster-test-diag", prClusterDiag.value,
                                                "Clustering kernel test self-evaluations");
  predictCmd->add_option("--out", prOut, "Output predictions CSV")->required();

  // evaluate
  EvaluateConfig ev;
  std::string evPred, evLabels;
  auto* evalCmd = app.add_subcommand("evaluate", "Score a predictions file");
  evalCmd->add_option("--predictions", evPred, "Predictions CSV from predict")->required();
  evalCmd->add_option("--labels", evLabels, "True labels, one per line")->required();
  evalCmd->add_option("--metric", ev.metric, "accuracy or auc")->capture_default_str();

  // cv
  TrainArgs cvArgs;
  CvConfig cv;
  OptionalString cvOut;
  auto* cvCmd = app.add_subcommand("cv", "Grid search with stratified k-fold cross-validation");
  cvArgs.add(cvCmd);
  cvCmd->add_option("--Cs", cv.Cs, "C grid (default 10^-1, 10^-0.5, ..., 10^2)");
  cvCmd->add_option("--ps", cv.ps, "p grid")->capture_default_str();
  cvCmd->add_option("--ls", cv.ls, "Cluster count grid")->capture_default_str();
  cvCmd->add_option("--evenness-lo", cv.evennessLo, "Lower end of the evenness interval")->capture_default_str();
  cvCmd->add_option("--evenness-hi", cv.evennessHi, "Upper end of the evenness interval")->capture_default_str();
  cvCmd->add_option("--evenness-count", cv.evennessCount, "Evenness targets in the interval")
      ->capture_default_str();
  cvCmd->add_option("--folds", cv.folds, "Number of folds")->capture_default_str();
  cvCmd->add_option("--metric", cv.metric, "accuracy or auc")->capture_default_str();
  cvOut.option = cvCmd->add_option("--out", cvOut.value, "Per-fold results CSV");

  // bound
  BoundConfig bd;
  std::vector<std::string> bdKernels;
  OptionalString bdModel, bdClusterKernel, bdCsv;
  OptionalDouble bdRadius, bdB;
  auto* boundCmd = app.add_subcommand("bound", "Rademacher and generalization bounds");
  boundCmd->add_option("--kernel", bdKernels, "Kernel NAME=PATH (repeatable)")->required();
  bdModel.option = boundCmd->add_option("--model", bdModel.value, "Trained model (supplies p, D, likelihoods)");
  bdClusterKernel.option = boundCmd->add_option("--cluster-kernel", bdClusterKernel.value,
                                                "Clustering kernel for --assignment hard");
  boundCmd->add_option("--assignment", bd.assignment, "uniform, hard or model")->capture_default_str();
  boundCmd->add_option("--clusters", bd.clusters, "Number of clusters l")->capture_default_str();
  bdRadius.option = boundCmd->add_option("--radius", bdRadius.value, "Hypothesis radius D");
  boundCmd->add_option("--p", bd.p, "Norm parameter p")->capture_default_str();
  bdB.option = boundCmd->add_option("--kernel-bound", bdB.value, "B (default: largest diagonal)");
  boundCmd->add_option("--loss-bound", bd.lossBound, "Bound on the loss")->capture_default_str();
  boundCmd->add_option("--lipschitz", bd.lipschitz, "Lipschitz constant (recorded only)")->capture_default_str();
  boundCmd->add_option("--delta", bd.delta, "Confidence parameter")->capture_default_str();
  boundCmd->add_option("--risk", bd.risk, "Empirical risk")->capture_default_str();
  boundCmd->add_option("--seed", bd.seed, "Seed for --assignment hard")->capture_default_str();
  boundCmd->add_option("--restarts", bd.restarts, "k-means restarts")->capture_default_str();
  boundCmd->add_option("--normalization", bd.normalization, "none, multiplicative or trace")
      ->capture_default_str();
  bdCsv.option = boundCmd->add_option("--csv", bdCsv.value, "Write the report as a CSV row");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  }

  try {
    if (computeCmd->parsed()) {
      ck.features = ckFeatures;
      if (auto t = ckTest.get()) ck.testFeatures = *t;
      ck.outDir = ckOut;
      return cmdComputeKernels(ck, out);
    }
    if (clusterCmd->parsed()) {
      cl.kernel = parseNamedPath(clKernel);
      cl.evenness = clEvenness.get();
      cl.tau = clTau.get();
      cl.out = clOut;
      return cmdCluster(cl, out);
    }
    if (trainCmd->parsed()) {
      TrainConfig c = tr.finish();
      c.model = trModel;
      if (auto r = trReport.get()) c.report = *r;
      return cmdTrain(c, out);
    }
    if (predictCmd->parsed()) {
      pr.model = prModel;
      pr.cross = namedPaths(prCross);
      pr.testDiag = namedPaths(prDiag);
      if (auto c = prClusterCross.get()) pr.clusterCross = *c;
      if (auto d = prClusterDiag.get()) pr.clusterTestDiag = *d;
      pr.out = prOut;
      return cmdPredict(pr, out);
    }
    if (evalCmd->parsed()) {
      ev.predictions = evPred;
      ev.labels = evLabels;
      return cmdEvaluate(ev, out);
    }
    if (cvCmd->parsed()) {
      cv.train = cvArgs.finish();
      if (auto o = cvOut.get()) cv.out = *o;
      return cmdCv(cv, out);
    }
    if (boundCmd->parsed()) {
      bd.kernels = namedPaths(bdKernels);
      if (auto m = bdModel.get()) bd.model = *m;
      bd.clusterKernel = bdClusterKernel.get();
      bd.radius = bdRadius.get();
      bd.kernelBound = bdB.get();
      if (auto c = bdCsv.get()) bd.csv = *c;
      return cmdBound(bd, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  }
  return kUsageError;
}

}  // namespace clmkl::cli
