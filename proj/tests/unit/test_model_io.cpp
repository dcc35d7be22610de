#include "clmkl/error.hpp"
#include "clmkl/model_io.hpp"

#include "synthetic.hpp"

#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <filesystem>

using namespace clmkl;

namespace {

void checkSamePredictions(const FittedModel& a, const FittedModel& b, const synth::RegimeKernels& k) {
  const CrossKernelMatrix* cc = a.needsClusterKernel() ? &k.k0Cross : nullptr;
  const Matrix fa = predictFitted(a, k.cross, cc);
  const Matrix fb = predictFitted(b, k.cross, cc);
  CHECK(fa == fb);
}

}  // namespace

TEST_CASE("model round trip reproduces predictions exactly") {
  const synth::TwoRegime d = synth::twoRegime(50, 20, 3);
  const synth::RegimeKernels k = synth::regimeKernels(d);
  for (Method method : {Method::clmkl, Method::mkl, Method::unifSvm, Method::lmkl}) {
    for (NormalizationMode mode : {NormalizationMode::none, NormalizationMode::multiplicative}) {
      FitOptions o;
      o.method = method;
      o.C = 3.0;
      o.p = 1.5;
      o.clusters = 2;
      o.evenness = method == Method::clmkl ? std::optional<double>(0.6) : std::nullopt;
      o.restarts = 2;
      o.lmklSteps = 5;
      o.normalization = mode;
      const FittedModel m = fitModel(k.bundle, &k.k0, d.yTrain, o);
      const std::string text = modelToJson(m);
      const FittedModel back = modelFromJson(text);
      CHECK(modelToJson(back) == text);
      CHECK((back.method == m.method));
      CHECK(back.kernelNames() == m.kernelNames());
      checkSamePredictions(m, back, k);
    }
  }
}

TEST_CASE("hard assignment and one-vs-all survive the round trip") {
  const synth::TwoRegime d = synth::twoRegime(45, 10, 4);
  const synth::RegimeKernels k = synth::regimeKernels(d);
  Vector y3 = d.yTrain;
  for (Index i = 0; i < y3.size(); i += 3) y3(i) = 7.0;
  FitOptions o;
  o.clusters = 2;
  o.restarts = 2;
  const FittedModel m = fitModel(k.bundle, &k.k0, y3, o);
  REQUIRE(m.models.size() == 3);
  CHECK(std::isinf(m.models[0].likelihood.tau));
  const std::string text = modelToJson(m);
  CHECK(text.find("\"tau\": \"inf\"") != std::string::npos);
  const FittedModel back = modelFromJson(text);
  CHECK(std::isinf(back.models[0].likelihood.tau));
  CHECK(back.classes == m.classes);
  checkSamePredictions(m, back, k);
}

TEST_CASE("regression models round trip") {
  const synth::TwoRegime d = synth::twoRegime(30, 10, 6);
  const synth::RegimeKernels k = synth::regimeKernels(d);
  FitOptions o;
  o.method = Method::mkl;
  o.loss = Loss::epsInsensitive(0.05);
  const FittedModel m = fitModel(k.bundle, nullptr, d.train.col(1), o);
  const FittedModel back = modelFromJson(modelToJson(m));
  CHECK(back.isRegression());
  CHECK(back.loss.epsilon == 0.05);
  checkSamePredictions(m, back, k);
}

TEST_CASE("malformed model files are rejected") {
  const synth::TwoRegime d = synth::twoRegime(30, 5, 8);
  const synth::RegimeKernels k = synth::regimeKernels(d);
  FitOptions o;
  o.method = Method::mkl;
  const std::string text = modelToJson(fitModel(k.bundle, nullptr, d.yTrain, o));
  CHECK_THROWS_AS(modelFromJson("{"), FormatError);
  CHECK_THROWS_AS(modelFromJson("[]"), FormatError);

  nlohmann::json j = nlohmann::json::parse(text);
  auto mutate = [&](auto f) {
    nlohmann::json copy = j;
    f(copy);
    return copy.dump();
  };
  CHECK_THROWS_AS(modelFromJson(mutate([](nlohmann::json& x) { x["schema"] = "lmkl"; })), FormatError);
  CHECK_THROWS_AS(modelFromJson(mutate([](nlohmann::json& x) { x["version"] = 99; })), FormatError);
  CHECK_THROWS_AS(modelFromJson(mutate([](nlohmann::json& x) { x["format"] = "other"; })), FormatError);
  CHECK_THROWS_AS(modelFromJson(mutate([](nlohmann::json& x) { x.erase("models"); })), FormatError);
  CHECK_THROWS_AS(modelFromJson(mutate([](nlohmann::json& x) { x["models"][0]["alpha"].push_back(1.0); })),
                  Error);

  const std::filesystem::path dir = std::filesystem::path(CLMKL_TEST_TMP) / "model_io";
  std::filesystem::create_directories(dir);
  saveModel(modelFromJson(text), dir / "m.json");
  CHECK(modelToJson(loadModel(dir / "m.json")) == text);
  CHECK_THROWS_AS(loadModel(dir / "missing.json"), Error);
}
