#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "herlab/error.hpp"
#include "herlab/pipeline.hpp"
#include "herlab/presets.hpp"
#include "herlab/random.hpp"
#include "herlab/regression.hpp"
#include "oracles.hpp"

using namespace herlab;

namespace {

const std::vector<std::string>& name_vocab() {
  static const auto vocab = task_vocab(TemplateKind::NameQA, names_catalog());
  return vocab;
}

ScoredLabel scored(std::string text, std::string truth, double confidence = 1.0, std::size_t episode = 0) {
  return ScoredLabel{std::move(text), truth, truth, confidence, episode};
}

std::vector<ScoredLabel> preset_labels(const std::string& preset, std::size_t n) {
  const auto catalog = names_catalog();
  const auto batch = generate_batch(catalog, EnvConfig{}, init_policy(16, 32, 0), n, ActMode::UniformRandom, 21);
  const NoisyRelabeler relabeler(make_preset(preset));
  const auto labeled = relabel_batch(batch, name_prompt(), relabeler).labeled;
  return scored_labels(labeled, TemplateKind::NameQA);
}

std::vector<RegressionPoint> synthetic_grid(double noise, std::uint64_t seed) {
  Engine rng(seed);
  std::vector<RegressionPoint> points;
  for (int set = 0; set < 4; ++set) {
    for (int task = 0; task < 10; ++task) {
      RegressionPoint p;
      p.task = "task" + std::to_string(task);
      p.precision = uniform01(rng);
      p.accuracy = uniform01(rng);
      p.success = 0.1 + 1.4 * p.precision + 0.15 * p.accuracy + 0.03 * task + noise * standard_normal(rng);
      points.push_back(p);
    }
  }
  return points;
}

}  // namespace

TEST_CASE("label classification") {
  CHECK(classify_label("a basketball", name_vocab(), "basketball") == LabelClass::Correct);
  CHECK(classify_label("a cube", name_vocab(), "banana") == LabelClass::Irrelevant);
  CHECK(classify_label("a pear", name_vocab(), "banana") == LabelClass::Wrong);
  CHECK(classify_label("Lift a a 3d model of a banana", name_vocab(), "banana") == LabelClass::Correct);
  CHECK(classify_label("a pear and a banana", name_vocab(), "banana") == LabelClass::Correct);
  CHECK(classify_label("Bananas!", name_vocab(), "banana") == LabelClass::Irrelevant);
}

TEST_CASE("quality reports") {
  const std::vector<ScoredLabel> labels{
      scored("a car", "car"), scored("a pear", "pear"), scored("a pear", "car"), scored("a cube", "car")};
  const auto report = quality_report(labels, name_vocab());
  CHECK(report.counts.correct == 2);
  CHECK(report.counts.wrong == 1);
  CHECK(report.counts.irrelevant == 1);
  CHECK(report.accuracy == doctest::Approx(0.5));
  CHECK(*report.precision == doctest::Approx(2.0 / 3.0));
  REQUIRE(report.per_object.size() == 2);
  CHECK(report.per_object[0].object == "car");
  CHECK(report.per_object[0].counts.n() == 3);

  const std::vector<ScoredLabel> irrelevant{scored("a cube", "car"), scored("it is round", "pear")};
  const auto none = quality_report(irrelevant, name_vocab());
  CHECK(none.accuracy == 0.0);
  CHECK_FALSE(none.precision.has_value());

  CHECK_THROWS_AS(quality_report(std::span<const ScoredLabel>{}, name_vocab()), Error);
}

TEST_CASE("precision is never below accuracy") {
  Engine rng(3);
  const auto& vocab = name_vocab();
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ScoredLabel> labels;
    const auto n = 1 + uniform_index(rng, 30);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& truth = vocab[uniform_index(rng, vocab.size())];
      const auto roll = uniform_index(rng, 3);
      const std::string text = roll == 0 ? "a " + truth : roll == 1 ? "a " + vocab[uniform_index(rng, vocab.size())] : "a cube";
      labels.push_back(scored(text, truth));
    }
    const auto report = quality_report(labels, vocab);
    if (report.precision) CHECK(*report.precision >= report.accuracy - 1e-12);
  }
}

TEST_CASE("the zeroshot preset has the target accuracy") {
  const auto labels = preset_labels("names-zeroshot", 10300);
  const auto report = quality_report(labels, name_vocab());
  CHECK(report.n >= 9640);
  CHECK(std::abs(report.accuracy - 0.547) <= 0.015);
}

TEST_CASE("confidence selection") {
  const std::vector<double> confidence{0.9, 0.1, 0.5, 0.7};
  const std::vector<std::size_t> episode{0, 1, 2, 3};
  CHECK(select_most_confident(confidence, episode, 0.5) == std::vector<std::size_t>{0, 3});
  CHECK(select_most_confident(confidence, episode, 0.51) == std::vector<std::size_t>{0, 2, 3});
  CHECK_THROWS_AS(select_most_confident(confidence, episode, 0.0), Error);
}

TEST_CASE("decile sweep") {
  std::vector<ScoredLabel> labels;
  for (std::size_t i = 0; i < 20; ++i) {
    const bool correct = i % 4 != 0;
    labels.push_back(scored(correct ? "a car" : "a pear", "car", correct ? 1.0 : 0.0, i));
  }
  const auto sweep = decile_sweep(labels, name_vocab());
  REQUIRE(sweep.size() == 10);
  CHECK(sweep.front().keep_fraction == doctest::Approx(1.0));
  CHECK(sweep.back().keep_fraction == doctest::Approx(0.1));
  CHECK(*sweep.front().precision == doctest::Approx(quality_report(labels, name_vocab()).precision.value()));
  for (const auto& p : sweep) {
    if (p.keep_fraction <= 0.75 + 1e-9) CHECK(*p.precision == doctest::Approx(1.0));
  }
  labels.resize(9);
  CHECK_THROWS_AS(decile_sweep(labels, name_vocab()), Error);
}

TEST_CASE("filtering helps calibrated labels only") {
  auto precision_at = [](const std::vector<SweepPoint>& sweep, double keep) {
    for (const auto& p : sweep) {
      if (std::abs(p.keep_fraction - keep) < 1e-9) return p.precision.value();
    }
    FAIL("missing sweep point");
    return 0.0;
  };
  const auto fs = decile_sweep(preset_labels("names-fewshot", 10000), name_vocab());
  const auto zs = decile_sweep(preset_labels("names-zeroshot", 10000), name_vocab());
  CHECK(precision_at(fs, 0.5) - precision_at(fs, 1.0) >= 0.10);
  CHECK(std::abs(precision_at(zs, 0.5) - precision_at(zs, 1.0)) <= 0.05);
}

TEST_CASE("calibration histogram") {
  const std::vector<ScoredLabel> one{scored("a car", "car", 0.95)};
  const auto bins = calibration_histogram(one, name_vocab(), 10);
  REQUIRE(bins.size() == 10);
  CHECK(bins[9].counts.n() == 1);
  CHECK(bins[9].lo == doctest::Approx(0.9));
  const std::vector<ScoredLabel> top{scored("a car", "car", 1.0)};
  CHECK(calibration_histogram(top, name_vocab(), 10)[9].counts.n() == 1);
  CHECK_THROWS_AS(calibration_histogram(one, name_vocab(), 1), Error);

  const auto fs = calibration_histogram(preset_labels("names-fewshot", 5000), name_vocab(), 10);
  auto frac = [](const CalibrationBin& b) { return static_cast<double>(b.counts.correct) / b.counts.n(); };
  const CalibrationBin* lowest = nullptr;
  for (const auto& b : fs) {
    if (b.counts.n() > 0) {
      lowest = &b;
      break;
    }
  }
  REQUIRE(lowest != nullptr);
  REQUIRE(fs.back().counts.n() > 0);
  CHECK(frac(fs.back()) > frac(*lowest));
}

TEST_CASE("regression recovers planted coefficients") {
  const auto fit = fit_task_regression(synthetic_grid(0.0, 1));
  CHECK(std::abs(fit.precision.estimate - 1.4) < 1e-6);
  CHECK(std::abs(fit.accuracy.estimate - 0.15) < 1e-6);
  REQUIRE(fit.intercepts.size() == 10);
  for (int task = 0; task < 10; ++task) CHECK(std::abs(fit.intercepts[task].estimate - (0.1 + 0.03 * task)) < 1e-6);
  CHECK(fit.n_points == 40);
  CHECK(fit.dof == 28);
}

TEST_CASE("regression matches the normal equations under noise") {
  const auto points = synthetic_grid(0.02, 2);
  const auto fit = fit_task_regression(points);
  CHECK(std::abs(fit.precision.estimate - 1.4) <= 3 * fit.precision.std_error);
  CHECK(std::abs(fit.accuracy.estimate - 0.15) <= 3 * fit.accuracy.std_error);

  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (const auto& p : points) {
    std::vector<double> row{p.precision, p.accuracy};
    for (int task = 0; task < 10; ++task) row.push_back(p.task == "task" + std::to_string(task) ? 1.0 : 0.0);
    x.push_back(row);
    y.push_back(p.success);
  }
  const auto ls = oracle::normal_equations(x, y);
  CHECK(fit.precision.estimate == doctest::Approx(ls.beta[0]).epsilon(1e-9));
  CHECK(fit.accuracy.estimate == doctest::Approx(ls.beta[1]).epsilon(1e-9));
  CHECK(fit.sigma2 == doctest::Approx(ls.sigma2).epsilon(1e-9));
  CHECK(fit.precision.std_error == doctest::Approx(std::sqrt(ls.sigma2 * ls.inverse_diagonal[0])).epsilon(1e-9));
  CHECK(fit.accuracy.t == doctest::Approx(ls.beta[1] / std::sqrt(ls.sigma2 * ls.inverse_diagonal[1])).epsilon(1e-9));
}

TEST_CASE("degenerate regression designs are rejected") {
  auto constant = synthetic_grid(0.01, 3);
  for (auto& p : constant) p.precision = 0.5;
  CHECK_THROWS_AS(fit_task_regression(constant), SingularDesignError);

  auto collinear = synthetic_grid(0.01, 3);
  for (auto& p : collinear) p.accuracy = 2.0 * p.precision;
  CHECK_THROWS_AS(fit_task_regression(collinear), SingularDesignError);

  auto few = synthetic_grid(0.01, 3);
  few.resize(12);
  CHECK_THROWS_AS(fit_task_regression(few), SingularDesignError);
}

TEST_CASE("unigram frequencies") {
  const std::vector<std::string> texts{"a banana", "it is a banana"};
  const auto counts = unigram_frequencies(texts);
  REQUIRE(counts.size() == 1);
  CHECK(counts[0] == std::pair<std::string, std::size_t>{"banana", 2});
  CHECK(unigram_frequencies(std::span<const std::string>{}).empty());

  const std::vector<std::string> ties{"a pear", "a car", "the car"};
  const auto ranked = unigram_frequencies(ties);
  REQUIRE(ranked.size() == 2);
  CHECK(ranked[0].first == "car");
  CHECK(ranked[1].first == "pear");

  const auto batch = generate_batch(names_catalog(), EnvConfig{}, init_policy(16, 32, 0), 5000, ActMode::UniformRandom, 21);
  std::vector<std::string> zs;
  for (const auto& l : relabel_batch(batch, name_prompt(), NoisyRelabeler(make_preset("names-zeroshot"))).labeled) {
    zs.push_back(l.label.text);
  }
  const auto top = unigram_frequencies(zs);
  const auto& vocab = name_vocab();
  auto first_name = std::find_if(top.begin(), top.end(), [&](const auto& entry) {
    return std::find(vocab.begin(), vocab.end(), entry.first) != vocab.end();
  });
  REQUIRE(first_name != top.end());
  CHECK(first_name->first == "basketball");
  CHECK(top[0].first == "cube");
}

TEST_CASE("per-task quality") {
  const std::vector<ScoredLabel> labels{
      scored("a car", "car"), scored("a car", "pear"), scored("a pear", "pear"), scored("a cube", "book")};
  const auto quality = task_quality(labels, name_vocab());
  REQUIRE(quality.size() == name_vocab().size());
  for (const auto& q : quality) {
    CAPTURE(q.task);
    if (q.task == "car") {
      CHECK(q.mentions == 2);
      CHECK(q.truths == 1);
      CHECK(q.precision == doctest::Approx(0.5));
      CHECK(q.accuracy == doctest::Approx(1.0));
    } else if (q.task == "pear") {
      CHECK(q.precision == doctest::Approx(1.0));
      CHECK(q.accuracy == doctest::Approx(0.5));
    } else if (q.task == "book") {
      CHECK(q.mentions == 0);
      CHECK(q.precision == 0.0);
      CHECK(q.accuracy == 0.0);
    }
  }
}
