#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "arud/ctc.hpp"

using namespace arud;

namespace {

// Rows are linear probabilities; stored as natural logs.
EmissionMatrix make_emission(std::vector<std::string> alphabet,
                             const std::vector<std::vector<double>>& rows) {
  EmissionMatrix e;
  e.alphabet = std::move(alphabet);
  e.frames = rows.size();
  for (const auto& row : rows)
    for (double p : row) e.values.push_back(std::log(p));
  e.validate();
  return e;
}

EmissionMatrix random_emission(std::mt19937& rng, std::size_t frames,
                               std::vector<std::string> alphabet) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<std::vector<double>> rows(frames,
                                        std::vector<double>(alphabet.size()));
  for (auto& row : rows) {
    double total = 0.0;
    for (double& p : row) total += (p = u(rng));
    for (double& p : row) p /= total;
  }
  return make_emission(std::move(alphabet), rows);
}

}  // namespace

TEST_CASE("emission validation") {
  CHECK_NOTHROW(make_emission({kBlank, "a"}, {{0.5, 0.5}}));
  EmissionMatrix bad;
  bad.alphabet = {kBlank, "a"};
  bad.frames = 1;
  bad.values = {std::log(0.5), std::log(0.3)};
  CHECK_THROWS_AS(bad.validate(), BadEmission);
  EmissionMatrix shape;
  shape.alphabet = {kBlank, "a"};
  shape.frames = 2;
  shape.values = {std::log(0.5), std::log(0.5)};
  CHECK_THROWS_AS(shape.validate(), BadEmission);
}

TEST_CASE("greedy collapse rules") {
  // argmax path blank,a,a,blank,b -> "ab"
  auto e = make_emission({kBlank, "a", "b"}, {{0.8, 0.1, 0.1},
                                              {0.1, 0.8, 0.1},
                                              {0.1, 0.8, 0.1},
                                              {0.8, 0.1, 0.1},
                                              {0.1, 0.1, 0.8}});
  CHECK(greedy_decode(e).text == "ab");

  auto blanks = make_emission({kBlank, "a"}, {{0.9, 0.1}, {0.9, 0.1}});
  CHECK(greedy_decode(blanks).text == "");

  // a, blank, a -> "aa"
  auto sep = make_emission({kBlank, "a"}, {{0.1, 0.9}, {0.9, 0.1}, {0.1, 0.9}});
  CHECK(greedy_decode(sep).text == "aa");
}

TEST_CASE("brute force on hand-enumerable instances") {
  auto single = make_emission({kBlank, "a"}, {{0.1, 0.9}});
  auto r = brute_force_decode(single);
  CHECK(r.text == "a");
  CHECK(r.log_score == doctest::Approx(std::log(0.9)));

  // uniform over {blank,a}, T=2: mass("a") = 3/4 via [a,a],[a,-],[-,a]
  auto uniform = make_emission({kBlank, "a"}, {{0.5, 0.5}, {0.5, 0.5}});
  r = brute_force_decode(uniform);
  CHECK(r.text == "a");
  CHECK(r.log_score == doctest::Approx(std::log(0.75)));

  // T=2, blank-heavy: "" keeps [-,-] = 0.64 vs "a" at 0.36
  auto blanky = make_emission({kBlank, "a"}, {{0.8, 0.2}, {0.8, 0.2}});
  r = brute_force_decode(blanky);
  CHECK(r.text == "");
  CHECK(r.log_score == doctest::Approx(std::log(0.64)));
}

TEST_CASE("brute force guard") {
  std::mt19937 rng(1);
  auto big = random_emission(rng, 9, {kBlank, "a"});
  CHECK_THROWS_AS(brute_force_decode(big), TooLarge);
  auto wide = random_emission(rng, 2, {kBlank, "a", "b", "c", "d", "e"});
  CHECK_THROWS_AS(brute_force_decode(wide), TooLarge);
}

TEST_CASE("beam with wide beam matches the brute-force oracle") {
  std::mt19937 rng(77);
  std::vector<std::vector<std::string>> alphabets = {
      {kBlank, "a"}, {kBlank, "a", "b"}, {kBlank, "a", "b", " "}};
  for (int trial = 0; trial < 120; ++trial) {
    const auto& alphabet = alphabets[trial % alphabets.size()];
    std::uniform_int_distribution<std::size_t> frames(1, 6);
    auto e = random_emission(rng, frames(rng), alphabet);
    auto oracle = brute_force_decode(e);
    auto beam = beam_decode(e, 4096);
    CHECK(beam.text == oracle.text);
    CHECK(beam.log_score == doctest::Approx(oracle.log_score).epsilon(1e-9));
  }
}

TEST_CASE("beam n-best scores are non-increasing and deterministic") {
  std::mt19937 rng(13);
  auto e = random_emission(rng, 6, {kBlank, "a", "b"});
  auto r1 = beam_decode(e, 16);
  auto r2 = beam_decode(e, 16);
  CHECK(r1.text == r2.text);
  CHECK(r1.log_score == r2.log_score);
  REQUIRE(!r1.n_best.empty());
  CHECK(r1.n_best.front().first == r1.text);
  for (std::size_t i = 1; i < r1.n_best.size(); ++i)
    CHECK(r1.n_best[i - 1].second >= r1.n_best[i].second);
}

TEST_CASE("greedy path probability never beats the marginal") {
  std::mt19937 rng(29);
  for (int trial = 0; trial < 40; ++trial) {
    auto e = random_emission(rng, 5, {kBlank, "a", "b"});
    auto greedy = greedy_decode(e);
    auto oracle = brute_force_decode(e);
    CHECK(greedy.log_score <= oracle.log_score + 1e-12);
  }
}

TEST_CASE("language model fusion steers ambiguous words") {
  // acoustics slightly prefer "ac", the model has only ever seen "ab"
  auto lm = NGramModel::train({"ab", "ab", "ab"}, 2);
  auto e = make_emission({kBlank, "a", "b", "c", " "},
                         {{0.02, 0.92, 0.02, 0.02, 0.02},
                          {0.02, 0.02, 0.45, 0.49, 0.02}});
  auto plain = beam_decode(e, 64);
  CHECK(plain.text == "ac");

  FusionConfig strong{/*alpha=*/4.0, /*beta=*/0.0};
  auto fused = beam_decode(e, 64, &lm, strong);
  CHECK(fused.text == "ab");

  FusionConfig off{/*alpha=*/0.0, /*beta=*/0.0};
  auto neutral = beam_decode(e, 64, &lm, off);
  CHECK(neutral.text == "ac");
}

TEST_CASE("fusion requires a space symbol") {
  auto lm = NGramModel::train({"ab"}, 2);
  auto e = make_emission({kBlank, "a"}, {{0.5, 0.5}});
  CHECK_THROWS_AS(beam_decode(e, 8, &lm, FusionConfig{}), MissingSpaceSymbol);
}

TEST_CASE("emission file round trip") {
  std::mt19937 rng(55);
  auto e = random_emission(rng, 4, {kBlank, "a", "ب", " "});
  std::ostringstream out(std::ios::binary);
  write_emission(e, out);
  std::string bytes = out.str();
  CHECK(bytes.substr(0, 4) == "CTCE");

  std::istringstream in(bytes, std::ios::binary);
  auto back = read_emission(in);
  CHECK(back.alphabet == e.alphabet);
  CHECK(back.frames == e.frames);
  for (std::size_t i = 0; i < e.values.size(); ++i)
    CHECK(back.values[i] == doctest::Approx(e.values[i]).epsilon(1e-6));

  // f32 quantization is idempotent: a second trip is byte-identical
  std::ostringstream out2(std::ios::binary);
  write_emission(back, out2);
  CHECK(out2.str() == bytes);
}

TEST_CASE("emission reader validation") {
  std::mt19937 rng(3);
  auto e = random_emission(rng, 2, {kBlank, "a"});
  std::ostringstream out(std::ios::binary);
  write_emission(e, out);
  std::string bytes = out.str();

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  std::istringstream in1(bad_magic, std::ios::binary);
  CHECK_THROWS_AS(read_emission(in1), BadEmission);

  std::string bad_version = bytes;
  bad_version[4] = 9;
  std::istringstream in2(bad_version, std::ios::binary);
  CHECK_THROWS_AS(read_emission(in2), BadEmission);

  std::string truncated = bytes.substr(0, bytes.size() - 3);
  std::istringstream in3(truncated, std::ios::binary);
  CHECK_THROWS_AS(read_emission(in3), BadEmission);
}
