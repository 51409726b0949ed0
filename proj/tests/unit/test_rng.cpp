#include <doctest.h>

#include <cmath>
#include <set>

#include "discern/rng.hpp"
#include "support.hpp"

using namespace discern;

TEST_CASE("splitmix64 matches the reference sequence") {
  std::uint64_t state = 0;
  CHECK(rng::splitmix64(state) == 0xE220A8397B1DCDAFULL);
  CHECK(rng::splitmix64(state) == 0x6E789E6AA1B965F4ULL);
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(rng::fnv1a64("") == 0xCBF29CE484222325ULL);
  CHECK(rng::fnv1a64("a") == 0xAF63DC4C8601EC8CULL);
}

TEST_CASE("xoshiro streams are reproducible and seed dependent") {
  rng::Xoshiro256 a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    CHECK(x == b());
    differs |= x != c();
  }
  CHECK(differs);
}

TEST_CASE("uniform stays in the open unit interval") {
  rng::Xoshiro256 gen(7);
  double sum = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = gen.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("normal draws have unit moments") {
  rng::Xoshiro256 gen(11);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = gen.normal();
    s += z;
    s2 += z * z;
  }
  const double mean = s / n;
  CHECK(std::abs(mean) < 0.01);
  CHECK(s2 / n - mean * mean == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("below respects its bound") {
  rng::Xoshiro256 gen(3);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 10000; ++i) {
    const auto v = gen.below(6);
    REQUIRE(v < 6);
    seen.insert(v);
  }
  CHECK(seen.size() == 6);
}

TEST_CASE("derive_key is order sensitive and deterministic") {
  CHECK(rng::derive_key(1, {"a", "b"}) == rng::derive_key(1, {"a", "b"}));
  CHECK(rng::derive_key(1, {"a", "b"}) != rng::derive_key(1, {"b", "a"}));
  CHECK(rng::derive_key(1, {"ab"}) != rng::derive_key(1, {"a", "b"}));
  CHECK(rng::derive_key(1, {"a"}) != rng::derive_key(2, {"a"}));
}

TEST_CASE("property: derived keys do not collide over distinct part lists") {
  std::set<std::uint64_t> keys;
  for (int i = 0; i < test::kPropertyCases; ++i) keys.insert(rng::derive_key(2021, {"cell", std::to_string(i)}));
  CHECK(keys.size() == static_cast<std::size_t>(test::kPropertyCases));
}
