#include <doctest.h>

#include <atomic>
#include <cstring>
#include <fstream>
#include <set>
#include <vector>

#include "artic/hash.hpp"
#include "artic/parallel.hpp"
#include "artic/random.hpp"

#include "helpers.hpp"

using namespace artic;

TEST_CASE("fnv1a64 matches the published test vectors") {
  CHECK(fnv1a64(nullptr, 0) == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a", 1) == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar", 6) == 0x85944171f73967e8ull);
}

TEST_CASE("fnv1a64_file hashes the byte content") {
  const std::string path = testutil::temp_path("hash.bin");
  const std::string payload = "volume payload \x01\x02\x03";
  std::ofstream(path, std::ios::binary) << payload;
  CHECK(fnv1a64_file(path) == fnv1a64(payload.data(), payload.size()));
}

TEST_CASE("mix_seed separates indices and seeds") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 8; ++s)
    for (std::uint64_t i = 0; i < 64; ++i) seen.insert(mix_seed(s, i));
  CHECK(seen.size() == 8 * 64);
  CHECK(mix_seed(7, 3) == mix_seed(7, 3));
}

TEST_CASE("rng streams are reproducible and in range") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    const double x = a.uniform01();
    CHECK(x == b.uniform01());
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  Rng c(7);
  for (int i = 0; i < 1000; ++i) {
    const double x = c.uniform(-3.0, 5.0);
    CHECK(x >= -3.0);
    CHECK(x <= 5.0);
  }
}

TEST_CASE("rng normal has unit scale and truncation holds its bound") {
  Rng rng(11);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / n) < 0.02);
  CHECK(std::abs(sq / n - 1.0) < 0.05);
  for (int i = 0; i < 20000; ++i)
    CHECK(std::abs(rng.truncated_normal(1.5)) <= 1.5);
}

TEST_CASE("parallel_for covers every index exactly once for any job count") {
  for (int jobs : {1, 2, 3, 8, 33}) {
    std::vector<std::atomic<int>> hits(257);
    parallel_for(hits.size(), jobs,
                 [&](std::size_t i) { hits[i].fetch_add(1); });
    for (const auto& h : hits) CHECK(h.load() == 1);
  }
}

TEST_CASE("parallel_for propagates a worker exception") {
  CHECK_THROWS_AS(parallel_for(100, 4,
                               [](std::size_t i) {
                                 if (i == 37)
                                   throw std::runtime_error("worker failure");
                               }),
                  std::runtime_error);
}
