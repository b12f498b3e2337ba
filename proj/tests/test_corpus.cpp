#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "specgnn/corpus.hpp"

using namespace specgnn;
using Catch::Approx;

namespace {

const char* kMinimalCorpus = R"({
  "n_classes": 2,
  "dims": {"t": 2, "a": 2, "v": 2},
  "conversations": [
    {"id": "c0", "split": "train",
     "utterances": [
       {"speaker": 0, "label": 1, "t": [0.5, -1.0], "a": [1.0, 0.0],
        "v": [0.0, 2.0]}
     ]}
  ]
})";

std::string write_temp(const std::string& contents, const std::string& name) {
  const std::string path = "/tmp/specgnn_test_" + name + ".json";
  std::ofstream out(path);
  out << contents;
  return path;
}

}  // namespace

TEST_CASE("minimal corpus parses") {
  const Corpus c = corpus_from_json(nlohmann::json::parse(kMinimalCorpus));
  REQUIRE(c.conversations.size() == 1);
  CHECK(c.conversations[0].size() == 1);
  CHECK(c.n_classes == 2);
  CHECK(c.dims.text == 2);
  const Utterance& u = c.conversations[0].utterances[0];
  CHECK(u.index == 0);
  CHECK(u.speaker_id == 0);
  CHECK(u.label == 1);
  CHECK(u.feat_text(1) == Approx(-1.0));
}

TEST_CASE("label equal to n_classes is rejected") {
  nlohmann::json j = nlohmann::json::parse(kMinimalCorpus);
  j["conversations"][0]["utterances"][0]["label"] = 2;
  CHECK_THROWS_AS(corpus_from_json(j), ParseError);
}

TEST_CASE("schema violations raise ParseError") {
  nlohmann::json j = nlohmann::json::parse(kMinimalCorpus);
  j["conversations"][0].erase("split");
  CHECK_THROWS_AS(corpus_from_json(j), ParseError);

  j = nlohmann::json::parse(kMinimalCorpus);
  j["conversations"][0]["split"] = "holdout";
  CHECK_THROWS_AS(corpus_from_json(j), ParseError);

  // NaN is not representable in JSON; the text form fails at parse time
  const std::string nan_text = R"({"n_classes": 1, "dims": {"t":1,"a":1,"v":1},
    "conversations": [{"id":"x","split":"train","utterances":
    [{"speaker":0,"label":0,"t":[NaN],"a":[0],"v":[0]}]}]})";
  const std::string path = write_temp(nan_text, "nan");
  CHECK_THROWS_AS(load_corpus(path), ParseError);
  std::remove(path.c_str());

  CHECK_THROWS_AS(load_corpus("/tmp/specgnn_does_not_exist.json"), ParseError);
}

TEST_CASE("a corpus with non-finite features refuses to serialize") {
  Corpus c = corpus_from_json(nlohmann::json::parse(kMinimalCorpus));
  c.conversations[0].utterances[0].feat_audio(0) =
      std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(corpus_to_json(c), ParseError);
}

TEST_CASE("dimension inconsistency raises InvalidInput") {
  nlohmann::json j = nlohmann::json::parse(kMinimalCorpus);
  j["conversations"][0]["utterances"][0]["a"] = {1.0, 2.0, 3.0};
  CHECK_THROWS_AS(corpus_from_json(j), InvalidInput);
}

TEST_CASE("save/load round-trips a synthetic corpus exactly") {
  SynthSpec spec;
  spec.seed = 17;
  spec.n_conversations = 5;
  spec.min_utterances = 2;
  spec.max_utterances = 6;
  spec.noise_sigma = 0.2;
  spec.flip_rate = 0.2;
  const Corpus original = generate_synthetic(spec);

  const std::string path = "/tmp/specgnn_test_roundtrip.json";
  save_corpus(original, path);
  const Corpus reloaded = load_corpus(path);
  std::remove(path.c_str());

  // doubles survive the JSON round trip bit-exactly (shortest-repr dump)
  REQUIRE(reloaded.conversations.size() == original.conversations.size());
  CHECK(corpus_to_json(reloaded) == corpus_to_json(original));
}

TEST_CASE("generator is deterministic under a fixed seed") {
  SynthSpec spec;
  spec.seed = 99;
  spec.n_conversations = 4;
  spec.flip_rate = 0.4;
  spec.noise_sigma = 0.5;
  const std::string once = corpus_to_json(generate_synthetic(spec)).dump();
  const std::string twice = corpus_to_json(generate_synthetic(spec)).dump();
  CHECK(once == twice);

  spec.seed = 100;
  CHECK(corpus_to_json(generate_synthetic(spec)).dump() != once);
}

TEST_CASE("noise-free unflipped corpus puts every modality on its prototype") {
  SynthSpec spec;
  spec.seed = 5;
  spec.n_conversations = 4;
  spec.flip_rate = 0.0;
  spec.noise_sigma = 0.0;
  const Corpus c = generate_synthetic(spec);
  for (const Conversation& conv : c.conversations) {
    for (const Utterance& u : conv.utterances) {
      for (const Eigen::VectorXd* f :
           {&u.feat_text, &u.feat_audio, &u.feat_visual}) {
        Eigen::Index arg = 0;
        f->maxCoeff(&arg);
        CHECK(static_cast<int>(arg) == u.label);
        CHECK(f->maxCoeff() == Approx(3.0));
      }
    }
  }
}

TEST_CASE("empirical flip fraction tracks flip_rate") {
  SynthSpec spec;
  spec.seed = 23;
  spec.n_conversations = 60;
  spec.min_utterances = 8;
  spec.max_utterances = 12;
  spec.flip_rate = 0.3;
  FlipRecord flips;
  const Corpus c = generate_synthetic(spec, &flips);

  int total = 0, flipped = 0;
  for (const auto& conv : flips) {
    for (const bool f : conv) {
      ++total;
      flipped += f ? 1 : 0;
    }
  }
  REQUIRE(total > 500);
  const double fraction = double(flipped) / total;
  CHECK(fraction == Approx(0.3).margin(0.05));
}

TEST_CASE("flips are exactly the majority-vote disagreements at zero noise") {
  SynthSpec spec;
  spec.seed = 31;
  spec.n_conversations = 10;
  spec.flip_rate = 0.3;
  spec.noise_sigma = 0.0;
  FlipRecord flips;
  const Corpus c = generate_synthetic(spec, &flips);

  for (std::size_t ci = 0; ci < c.conversations.size(); ++ci) {
    const Conversation& conv = c.conversations[ci];
    for (std::size_t ui = 0; ui < conv.utterances.size(); ++ui) {
      const Utterance& u = conv.utterances[ui];
      // nearest-prototype vote per modality
      std::vector<int> votes;
      for (const Eigen::VectorXd* f :
           {&u.feat_text, &u.feat_audio, &u.feat_visual}) {
        Eigen::Index arg = 0;
        f->maxCoeff(&arg);
        votes.push_back(static_cast<int>(arg));
      }
      int majority = votes[0];
      if (votes[1] == votes[2]) majority = votes[1];
      const bool disagrees = majority != u.label;
      CHECK(disagrees == static_cast<bool>(flips[ci][ui]));
    }
  }
}

TEST_CASE("split fractions partition the conversations") {
  SynthSpec spec;
  spec.seed = 7;
  spec.n_conversations = 10;
  spec.train_fraction = 0.6;
  spec.val_fraction = 0.2;
  const Corpus c = generate_synthetic(spec);
  CHECK(c.split_view("train").size() == 6);
  CHECK(c.split_view("val").size() == 2);
  CHECK(c.split_view("test").size() == 2);
}

TEST_CASE("invalid synth specs are rejected") {
  SynthSpec spec;
  spec.flip_rate = 1.5;
  CHECK_THROWS_AS(generate_synthetic(spec), InvalidConfig);
  spec = SynthSpec{};
  spec.trend_period = 1;
  CHECK_THROWS_AS(generate_synthetic(spec), InvalidConfig);
  spec = SynthSpec{};
  spec.dims.text = 2;  // below n_classes
  CHECK_THROWS_AS(generate_synthetic(spec), InvalidConfig);
  spec = SynthSpec{};
  spec.train_fraction = 0.9;
  spec.val_fraction = 0.3;
  CHECK_THROWS_AS(generate_synthetic(spec), InvalidConfig);
}
