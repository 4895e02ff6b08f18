/*
 * Copyright 2026 The Debias Pipeline Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "debias/caption/corpus.hpp"
#include "debias/common/hash.hpp"
#include "debias/common/io.hpp"
#include "debias/dataset/synth.hpp"
#include "debias/eval/energy.hpp"
#include "debias/extract/extractor.hpp"
#include "debias/filter/text_filter.hpp"
#include "debias/generate/amplify.hpp"
#include "debias/pipeline/runner.hpp"
#include "debias/train/grad_check.hpp"
#include "debias/train/loss.hpp"
#include "support/stub_server.hpp"

namespace fs = std::filesystem;
using namespace debias;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

// (1 - 0.5^0.7) / 0.7 evaluated with 50-digit arithmetic.
constexpr double kGceHalfQ07 = 0.54918256189648836821;

Verdict GceExactness() {
  const std::vector<double> probs{0.5, 0.5};
  const double got = gce_loss(probs, 0, 0.7);
  const double rel = std::abs(got - kGceHalfQ07) / kGceHalfQ07;
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> unif(1e-6, 1.0);
  int exact = 0;
  for (int i = 0; i < 100; ++i) {
    const double p = unif(gen);
    const std::vector<double> pr{p, 1.0 - p};
    if (gce_loss(pr, 0, 1.0) == 1.0 - p) ++exact;
  }
  return {rel <= 1e-12 && exact == 100,
          "relative error " + Fmt("%.3g", rel) + ", q=1 exact for " + std::to_string(exact) + "/100"};
}

Verdict GradientIdentity() {
  std::mt19937_64 gen(23);
  std::uniform_int_distribution<int> dim(2, 8), classes(2, 5), hidden(2, 6);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> qd(0.05, 1.0);
  double worst = 0.0;
  for (int m = 0; m < 20; ++m) {
    const auto d = static_cast<std::size_t>(dim(gen));
    const auto c = static_cast<std::size_t>(classes(gen));
    std::unique_ptr<DifferentiableClassifier> model;
    if (m % 2 == 0) {
      model = std::make_unique<LogisticModel>(d, c, 100 + m);
    } else {
      model = std::make_unique<TanhMlp>(d, static_cast<std::size_t>(hidden(gen)), c, 100 + m);
    }
    std::vector<LabeledVector> batch(4);
    for (auto& s : batch) {
      s.input.resize(d);
      for (auto& x : s.input) x = normal(gen);
      s.label = static_cast<int>(gen() % c);
    }
    worst = std::max(worst, gce_grad_check(*model, batch, qd(gen)).max_relative_deviation);
  }
  double worst_limit = 0.0;
  for (double p : {0.5, 0.25, 0.9, 0.01, 0.999, 0.1}) {
    const std::vector<double> pr{p, 1.0 - p};
    worst_limit = std::max(worst_limit, std::abs(gce_loss(pr, 0, 1e-8) + std::log(p)));
  }
  return {worst <= 1e-5 && worst_limit <= 1e-6,
          "max gradient deviation " + Fmt("%.3g", worst) + ", |gce(q=1e-8) + ln p| <= " + Fmt("%.3g", worst_limit)};
}

Verdict TopKOracle() {
  std::mt19937_64 gen(31);
  int mismatches = 0;
  int cases = 0;
  for (int list = 0; list < 200; ++list) {
    const auto n = static_cast<std::size_t>(1 + gen() % 5000);
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), gen);
    const bool ties = list % 2 == 0;
    std::vector<LossEntry> entries(n);
    for (std::size_t i = 0; i < n; ++i) {
      entries[i].id = "s" + std::to_string(perm[i]);
      entries[i].loss = ties ? static_cast<double>(gen() % 7) / 4.0
                             : std::uniform_real_distribution<double>(0.0, 5.0)(gen);
    }
    // Oracle: two stable sorts, secondary key first.
    std::vector<LossEntry> oracle = entries;
    std::stable_sort(oracle.begin(), oracle.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    std::stable_sort(oracle.begin(), oracle.end(), [](const auto& a, const auto& b) { return a.loss > b.loss; });

    const LossRanking ranking = rank(entries);
    for (std::size_t k : {std::size_t{1}, std::size_t{100}, n, n + 7}) {
      ++cases;
      const ConflictCandidateSet got = extract_topk(ranking, k);
      const std::size_t take = std::min(k, n);
      bool same = got.sample_ids.size() == take && got.losses.size() == take && got.k == k;
      for (std::size_t i = 0; same && i < take; ++i) {
        same = got.sample_ids[i] == oracle[i].id && got.losses[i] == oracle[i].loss;
      }
      if (!same) ++mismatches;
    }
  }
  return {mismatches == 0, std::to_string(cases - mismatches) + "/" + std::to_string(cases) + " cases equal the sort oracle"};
}

// Independent filter: regex tokens, map counts, sort, truncate, intersect.
std::vector<std::string> OracleKept(const std::vector<std::string>& texts, const std::set<std::string>& stop,
                                    std::size_t f) {
  const std::regex word("[a-z0-9]+");
  auto tokens = [&](std::string t) {
    for (auto& ch : t) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    std::vector<std::string> out;
    for (auto it = std::sregex_iterator(t.begin(), t.end(), word); it != std::sregex_iterator(); ++it) {
      out.push_back(it->str());
    }
    return out;
  };
  std::map<std::string, long> counts;
  for (const auto& t : texts) {
    for (const auto& w : tokens(t)) {
      if (!stop.count(w)) counts[w]++;
    }
  }
  std::vector<std::pair<long, std::string>> order;
  for (const auto& [w, n] : counts) order.emplace_back(-n, w);
  std::sort(order.begin(), order.end());
  std::set<std::string> top;
  for (std::size_t i = 0; i < std::min(f, order.size()); ++i) top.insert(order[i].second);
  std::vector<std::string> kept;
  for (const auto& t : texts) {
    for (const auto& w : tokens(t)) {
      if (top.count(w)) {
        kept.push_back(t);
        break;
      }
    }
  }
  return kept;
}

Verdict FilterOracle() {
  const std::vector<std::string> vocab = {"a", "the", "on", "in", "of", "Red", "red", "circle", "Square",
                                          "dog", "cat", "blue", "sky", "green", "tree", "young", "old",
                                          "man", "woman", "pole", "vault", "x1", "2nd", "and", "with"};
  const std::vector<std::string> seps = {" ", "  ", ", ", "-", "! ", "\t", "."};
  std::mt19937_64 gen(41);
  int equal = 0;
  for (int c = 0; c < 50; ++c) {
    TextCorpus corpus;
    std::vector<std::string> texts;
    const std::size_t n = 1 + gen() % 200;
    for (std::size_t i = 0; i < n; ++i) {
      std::string t;
      const std::size_t len = 1 + gen() % 9;
      for (std::size_t j = 0; j < len; ++j) {
        if (j) t += seps[gen() % seps.size()];
        t += vocab[gen() % vocab.size()];
      }
      if (i == 0) t += " tree";
      texts.push_back(t);
      corpus.records.push_back({"s" + std::to_string(i), 1, t});
    }
    FilterSpec spec;
    spec.num_classes = 1 + gen() % 6;
    if (c % 3 == 0) spec.f = static_cast<int>(1 + gen() % 12);
    const FilteredCorpus got = filter_corpus(corpus, spec);
    std::vector<std::string> got_texts;
    for (const auto& r : got.kept) got_texts.push_back(r.text);
    const bool partition = got.kept.size() + got.dropped.size() == n;
    if (partition && got_texts == OracleKept(texts, spec.stop_words, static_cast<std::size_t>(spec.resolved_f()))) {
      ++equal;
    }
  }

  FilterSpec ten;
  ten.num_classes = 10;
  const int f10 = ten.resolved_f();

  TextCorpus faces;
  const std::vector<std::string> lines = {"a young man smiling at the camera", "an old woman with glasses",
                                          "a young woman laughing", "an old man in a hat",
                                          "a young man with a beard", "an old woman outdoors",
                                          "person in pink sweater and blue pants"};
  for (std::size_t i = 0; i < lines.size(); ++i) faces.records.push_back({"f" + std::to_string(i), 1, lines[i]});
  FilterSpec two;
  two.num_classes = 2;
  const FilteredCorpus fc = filter_corpus(faces, two);
  const bool person_dropped = fc.dropped.size() == 1 && fc.dropped[0].record.text == lines.back();

  return {equal == 50 && f10 == 20 && person_dropped,
          std::to_string(equal) + "/50 corpora equal the oracle, F(10 classes)=" + std::to_string(f10) +
              ", sweater caption " + (person_dropped ? "dropped" : "kept")};
}

Verdict CarbonArithmetic() {
  EnergyLedger one;
  one.add("train", Energy::from_kwh(1.0), 1.0);
  const CarbonReport r1 = carbon_report(one);
  EnergyLedger two;
  two.add("train", Energy::from_kwh(2.5), 1.0);
  const CarbonReport r2 = carbon_report(two);

  std::mt19937_64 gen(53);
  int linear = 0;
  for (int l = 0; l < 100; ++l) {
    EnergyLedger a, b, sum;
    const int stages = 1 + static_cast<int>(gen() % 6);
    for (int s = 0; s < stages; ++s) {
      const auto ea = Energy::from_micro_wh(static_cast<std::int64_t>(gen() % 1'000'000'000'000ULL));
      const auto eb = Energy::from_micro_wh(static_cast<std::int64_t>(gen() % 1'000'000'000'000ULL));
      a.add("s" + std::to_string(s), ea, 0.0);
      b.add("s" + std::to_string(s), eb, 0.0);
      sum.add("s" + std::to_string(s), ea + eb, 0.0);
    }
    const CarbonReport ra = carbon_report(a), rb = carbon_report(b), rs = carbon_report(sum);
    bool ok = rs.total == ra.total + rb.total;
    Carbon stage_sum;
    for (int s = 0; s < stages; ++s) {
      ok = ok && rs.stages[s].carbon == ra.stages[s].carbon + rb.stages[s].carbon;
      stage_sum = stage_sum + rs.stages[s].carbon;
    }
    if (ok && stage_sum == rs.total) ++linear;
  }
  const bool ok = r1.total.grams_string() == "475" && r2.total.grams_string() == "1187.5" && linear == 100;
  return {ok, "1 kWh -> " + r1.total.grams_string() + " g, 2.5 kWh -> " + r2.total.grams_string() +
                  " g, linear on " + std::to_string(linear) + "/100 ledgers"};
}

ExperimentConfig DeskConfig() {
  ExperimentConfig c;
  SynthShapesSpec s;
  s.num_classes = 4;
  s.train_count = 2000;
  s.test_count = 400;
  s.conflict_ratio = 0.01;
  s.image_size = 32;
  s.seed = 0;
  c.dataset.synth = s;
  for (ClassifierConfig* t : {&c.biased_training, &c.debiased_training}) {
    t->input_size = 16;
    t->epochs = 10;
    t->batch_size = 64;
    t->base_lr = 0.05;
    t->lr_decay = {0.5, 5};
  }
  c.biased_training.loss_mode = LossMode::kGCE;
  c.biased_training.q = 0.7;
  c.debiased_training.loss_mode = LossMode::kCE;
  c.extraction.k = 20;
  c.caption.backend = "oracle";
  c.caption.m = 3;
  c.generation.backend = "oracle";
  c.generation.size = 32;
  c.eval.trials = 3;
  c.eval.export_embeddings = false;
  c.seed = 0;
  c.deterministic = true;
  c.workers = 1;
  return c;
}

struct DeskRuns {
  fs::path root;
  fs::path filtered;
  fs::path filtered_again;
  fs::path unfiltered;
  std::string error;
};

DeskRuns& Runs() {
  static DeskRuns runs = [] {
    DeskRuns r;
    r.root = fs::temp_directory_path() / ("debias-acceptance-" + std::to_string(::getpid()));
    fs::remove_all(r.root);
    r.filtered = r.root / "filtered";
    r.filtered_again = r.root / "filtered-again";
    r.unfiltered = r.root / "unfiltered";
    try {
      Pipeline(DeskConfig(), r.filtered).run_all(false);
      Pipeline(DeskConfig(), r.filtered_again).run_all(false);
      ExperimentConfig off = DeskConfig();
      off.filter.enabled = false;
      Pipeline(off, r.unfiltered).run_all(false);
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    return r;
  }();
  return runs;
}

Verdict EndToEnd() {
  const DeskRuns& runs = Runs();
  if (!runs.error.empty()) return {false, "pipeline failed: " + runs.error};
  const MetricsTable m = read_metrics(runs.filtered / "metrics.tsv");
  auto mean = [&](const char* model, const char* split, const char* metric) {
    return m.number("mean", model, split, metric).value_or(NAN);
  };
  const double gap = mean("biased", "train", "aligned_acc") - mean("biased", "train", "conflict_acc");
  double min_purity = 1.0;
  for (int t = 0; t < 3; ++t) {
    min_purity = std::min(min_purity, m.number(std::to_string(t), "extract", "train", "purity").value_or(NAN));
  }
  const double conflict_gain = mean("debiased", "test", "conflict_acc") - mean("vanilla", "test", "conflict_acc");
  const double overall_drop = mean("vanilla", "test", "overall_acc") - mean("debiased", "test", "overall_acc");
  const bool ok = gap >= 0.15 && min_purity >= 0.5 && conflict_gain >= 0.10 && overall_drop <= 0.02;
  return {ok, "f_B train aligned-conflict gap " + Fmt("%.3f", gap) + ", min purity@20 " + Fmt("%.3f", min_purity) +
                  ", f_D-f_vanilla conflict " + Fmt("%+.3f", conflict_gain) + ", overall drop " +
                  Fmt("%.3f", overall_drop)};
}

Verdict FilterAblation() {
  const DeskRuns& runs = Runs();
  if (!runs.error.empty()) return {false, "pipeline failed: " + runs.error};
  const auto with = read_metrics(runs.filtered / "metrics.tsv").number("mean", "debiased", "test", "conflict_acc");
  const auto without = read_metrics(runs.unfiltered / "metrics.tsv").number("mean", "debiased", "test", "conflict_acc");
  if (!with || !without) return {false, "conflict accuracy missing"};
  return {*with >= *without, "conflict accuracy with filter " + Fmt("%.4f", *with) + ", without " + Fmt("%.4f", *without)};
}

Verdict Determinism() {
  const DeskRuns& runs = Runs();
  if (!runs.error.empty()) return {false, "pipeline failed: " + runs.error};
  std::vector<std::string> files = {"metrics.tsv"};
  for (int t = 0; t < 3; ++t) {
    for (const char* f : {"metrics.tsv", "corpus.jsonl", "filtered.jsonl"}) {
      files.push_back("trial-" + std::to_string(t) + "/" + f);
    }
  }
  int identical = 0;
  for (const auto& f : files) {
    if (sha256_file(runs.filtered / f) == sha256_file(runs.filtered_again / f)) ++identical;
  }
  return {identical == static_cast<int>(files.size()),
          std::to_string(identical) + "/" + std::to_string(files.size()) + " metrics and corpus files byte-identical"};
}

Verdict AdapterRobustness() {
  const fs::path dir = fs::temp_directory_path() / ("debias-acceptance-adapter-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  SynthShapesSpec spec;
  spec.train_count = 60;
  spec.test_count = 8;
  spec.conflict_ratio = 0.5;
  const DatasetManifest manifest = synth_generate(spec, dir / "data");

  ConflictCandidateSet cands;
  for (std::size_t i = 0; i < 50; ++i) {
    cands.sample_ids.push_back(manifest.samples[i].id);
    cands.losses.push_back(1.0);
  }
  cands.k = 50;

  testing::StubServer cap_server("/caption", testing::caption_handler(), {0.1, 0.1, 7});
  HttpCaptioner captioner(cap_server.endpoint());
  BuildCorpusOptions copts;
  copts.seed = 3;
  copts.parallelism = 4;
  const TextCorpus corpus = build_corpus(cands, manifest, captioner, copts);

  std::set<std::pair<std::string, int>> keys;
  for (const auto& r : corpus.records) keys.insert({r.sample_id, r.caption_index});
  const auto cap_exec = cap_server.executions();
  const bool cap_once = std::all_of(cap_exec.begin(), cap_exec.end(), [](const auto& kv) { return kv.second == 1; });
  const bool cap_ok = corpus.failures.empty() && corpus.records.size() == 150 && keys.size() == 150 &&
                      cap_exec.size() == 50 && cap_once && cap_server.successes() == 50;

  testing::StubServer gen_server("/generate", testing::generation_handler(), {0.1, 0.1, 9});
  HttpGenerator generator(gen_server.endpoint());
  AmplifyOptions aopts;
  aopts.target = 50;
  aopts.seed = 5;
  aopts.parallelism = 4;
  const GeneratedSet set = amplify(passthrough(corpus), generator, class_vocab_from_names(manifest.class_names),
                                   aopts, dir / "generated");
  std::set<std::string> ids, gen_keys;
  std::size_t attr_match = 0;
  for (const auto& g : set.samples) {
    ids.insert(g.id);
    gen_keys.insert(generation_idempotency_key(g.prompt, g.seed));
    const auto scene = parse_scene(read_png(dir / "generated" / g.image_ref));
    if (scene && *scene == parse_prompt(g.prompt)) ++attr_match;
  }
  const auto gen_exec = gen_server.executions();
  const bool gen_once = std::all_of(gen_exec.begin(), gen_exec.end(), [](const auto& kv) { return kv.second == 1; });
  const bool gen_ok = set.samples.size() == 50 && ids.size() == 50 && gen_keys.size() == 50 && gen_once &&
                      gen_server.successes() == 50 && gen_exec.size() == 50 && attr_match == 50;

  fs::remove_all(dir);
  const long injected = cap_server.injected() + gen_server.injected();
  return {cap_ok && gen_ok && injected > 0,
          std::to_string(corpus.records.size()) + " captions / " + std::to_string(set.samples.size()) +
              " images, 0 duplicates, " + std::to_string(injected) + " injected faults absorbed, " +
              std::to_string(cap_server.replays() + gen_server.replays()) + " idempotent replays"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"GCE formula exactness", GceExactness},
      {"gradient identity", GradientIdentity},
      {"top-K oracle equivalence", TopKOracle},
      {"text-filter oracle equivalence", FilterOracle},
      {"carbon arithmetic", CarbonArithmetic},
      {"end-to-end debiasing effect", EndToEnd},
      {"text-filter ablation direction", FilterAblation},
      {"determinism", Determinism},
      {"adapter robustness", AdapterRobustness},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!v.pass) ++failed;
    std::cout << "criterion " << (i + 1) << " " << (v.pass ? "PASS" : "FAIL") << " [" << criteria[i].first
              << "] " << v.detail << " (" << Fmt("%.1f", secs) << "s)" << std::endl;
  }
  if (Runs().error.empty()) fs::remove_all(Runs().root);
  return failed == 0 ? 0 : 1;
}
