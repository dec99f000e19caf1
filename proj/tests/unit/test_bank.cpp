#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "sfanc/errors.hpp"
#include "sfanc/filter_bank.hpp"
#include "support/fixtures.hpp"

using namespace sfanc;
namespace fs = std::filesystem;

TEST_CASE("default_partition: log-spaced edges") {
  const BandPartition p = default_partition();
  REQUIRE(p.count() == 15);
  CHECK(p.bands.front().first == 20);
  CHECK(p.bands.back().second == 7980);

  // closed-form edge oracle: edge_k = round(20 * 399^(k/15))
  for (int k = 0; k <= 15; ++k) {
    const int expect = static_cast<int>(std::lround(20.0 * std::pow(399.0, k / 15.0)));
    const int got = (k < 15) ? p.bands[static_cast<std::size_t>(k)].first
                             : p.bands.back().second;
    CHECK(got == expect);
  }
  CHECK(p.bands[8].first == 488);

  // contiguous, ordered, inside [20, 7980]
  for (int i = 0; i < 15; ++i) {
    CHECK(p.bands[static_cast<std::size_t>(i)].first < p.bands[static_cast<std::size_t>(i)].second);
    if (i > 0) CHECK(p.bands[static_cast<std::size_t>(i) - 1].second == p.bands[static_cast<std::size_t>(i)].first);
  }
}

TEST_CASE("scenario_fingerprint tracks every scenario field") {
  const AncScenario a = fixtures::cheap_scenario();
  AncScenario b = a;
  CHECK(scenario_fingerprint(a) == scenario_fingerprint(b));
  b.step_size = 2e-4;
  CHECK(scenario_fingerprint(a) != scenario_fingerprint(b));
  b = a;
  b.secondary_path_estimate.coefficients[0] += 1e-9;
  CHECK(scenario_fingerprint(a) != scenario_fingerprint(b));
}

TEST_CASE("pretrain_bank: shape and determinism" * doctest::timeout(300)) {
  const AncScenario& sc = fixtures::cheap_scenario();
  const FilterBank& bank = fixtures::cheap_bank();
  REQUIRE(bank.filters.size() == 15);
  for (const auto& f : bank.filters) CHECK(f.taps() == sc.control_length);
  CHECK(bank.scenario_fingerprint == scenario_fingerprint(sc));

  const FilterBank again = pretrain_bank(default_partition(), sc, 4242);
  for (int i = 0; i < 15; ++i)
    CHECK(again.filters[static_cast<std::size_t>(i)].coefficients ==
          bank.filters[static_cast<std::size_t>(i)].coefficients);

  const FilterBank other = pretrain_bank(default_partition(), sc, 4243);
  CHECK(other.filters[8].coefficients != bank.filters[8].coefficients);
}

TEST_CASE("bank file round-trips exactly and rejects corruption") {
  const FilterBank& bank = fixtures::cheap_bank();
  const fs::path dir = fs::temp_directory_path() / "sfanc_bank_test";
  fs::create_directories(dir);
  const std::string path = (dir / "bank.sfb").string();
  save_bank(bank, path);

  SUBCASE("round trip") {
    const FilterBank loaded = load_bank(path);
    CHECK(loaded.scenario_fingerprint == bank.scenario_fingerprint);
    CHECK(loaded.partition.bands == bank.partition.bands);
    REQUIRE(loaded.filters.size() == bank.filters.size());
    for (std::size_t i = 0; i < bank.filters.size(); ++i)
      CHECK(loaded.filters[i].coefficients == bank.filters[i].coefficients);
  }

  SUBCASE("truncated file") {
    std::ifstream in(path, std::ios::binary);
    std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    const std::string trunc_path = (dir / "trunc.sfb").string();
    std::ofstream out(trunc_path, std::ios::binary | std::ios::trunc);
    out.write(all.data(), static_cast<std::streamsize>(all.size() / 3));
    out.close();
    CHECK_THROWS_AS(load_bank(trunc_path), DataError);
  }

  SUBCASE("count field must be 15") {
    std::ifstream in(path);
    std::string header, payload;
    std::getline(in, header);
    std::getline(in, payload);
    in.close();
    const auto pos = header.find("\"count\":15");
    REQUIRE(pos != std::string::npos);
    header.replace(pos, 10, "\"count\":14");
    const std::string bad = (dir / "count14.sfb").string();
    std::ofstream out(bad, std::ios::trunc);
    out << header << '\n' << payload << '\n';
    out.close();
    CHECK_THROWS_AS(load_bank(bad), DataError);
  }

  SUBCASE("payload corruption trips the checksum") {
    std::ifstream in(path);
    std::string header, payload;
    std::getline(in, header);
    std::getline(in, payload);
    in.close();
    payload[payload.size() / 2] = (payload[payload.size() / 2] == 'A') ? 'B' : 'A';
    const std::string bad = (dir / "corrupt.sfb").string();
    std::ofstream out(bad, std::ios::trunc);
    out << header << '\n' << payload << '\n';
    out.close();
    CHECK_THROWS_AS(load_bank(bad), DataError);
  }

  SUBCASE("version mismatch") {
    std::ifstream in(path);
    std::string header, payload;
    std::getline(in, header);
    std::getline(in, payload);
    in.close();
    const auto pos = header.find("\"version\":1");
    REQUIRE(pos != std::string::npos);
    header.replace(pos, 11, "\"version\":9");
    const std::string bad = (dir / "version.sfb").string();
    std::ofstream out(bad, std::ios::trunc);
    out << header << '\n' << payload << '\n';
    out.close();
    CHECK_THROWS_AS(load_bank(bad), DataError);
  }

  SUBCASE("missing file") { CHECK_THROWS_AS(load_bank((dir / "nope.sfb").string()), DataError); }
}
