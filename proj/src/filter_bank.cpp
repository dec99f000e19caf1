#include "sfanc/filter_bank.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "sfanc/errors.hpp"
#include "sfanc/noise.hpp"
#include "sfanc/parallel.hpp"
#include "sfanc/rng.hpp"

namespace sfanc {

using nlohmann::json;

BandPartition default_partition() {
  BandPartition p;
  const double ratio = 7980.0 / 20.0;
  std::vector<int> edges(16);
  for (int k = 0; k <= 15; ++k)
    edges[static_cast<std::size_t>(k)] =
        static_cast<int>(std::lround(20.0 * std::pow(ratio, k / 15.0)));
  for (int k = 0; k < 15; ++k)
    p.bands.emplace_back(edges[static_cast<std::size_t>(k)], edges[static_cast<std::size_t>(k) + 1]);
  return p;
}

namespace {

void append_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_f64(std::string& buf, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  append_u64(buf, bits);
}

void validate_partition(const BandPartition& p) {
  if (p.count() != kNumClasses)
    throw ParamError("partition must have exactly 15 bands");
  for (int i = 0; i < p.count(); ++i) {
    const auto [lo, hi] = p.bands[static_cast<std::size_t>(i)];
    if (!(20 <= lo && lo < hi && hi <= 7980))
      throw ParamError("partition band " + std::to_string(i) + " outside [20, 7980]");
    if (i > 0 && p.bands[static_cast<std::size_t>(i) - 1].second != lo)
      throw ParamError("partition bands must be contiguous");
  }
}

constexpr const char* kBankMagic = "sfanc-bank";
constexpr int kBankVersion = 1;

const char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string b64_encode(const std::string& in) {
  std::string out;
  out.reserve((in.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= in.size(); i += 3) {
    const std::uint32_t v = (static_cast<unsigned char>(in[i]) << 16) |
                            (static_cast<unsigned char>(in[i + 1]) << 8) |
                            static_cast<unsigned char>(in[i + 2]);
    out.push_back(kB64[(v >> 18) & 63]);
    out.push_back(kB64[(v >> 12) & 63]);
    out.push_back(kB64[(v >> 6) & 63]);
    out.push_back(kB64[v & 63]);
  }
  const std::size_t rem = in.size() - i;
  if (rem == 1) {
    const std::uint32_t v = static_cast<unsigned char>(in[i]) << 16;
    out.push_back(kB64[(v >> 18) & 63]);
    out.push_back(kB64[(v >> 12) & 63]);
    out.append("==");
  } else if (rem == 2) {
    const std::uint32_t v = (static_cast<unsigned char>(in[i]) << 16) |
                            (static_cast<unsigned char>(in[i + 1]) << 8);
    out.push_back(kB64[(v >> 18) & 63]);
    out.push_back(kB64[(v >> 12) & 63]);
    out.push_back(kB64[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

std::string b64_decode(const std::string& in) {
  int rev[256];
  std::fill(std::begin(rev), std::end(rev), -1);
  for (int i = 0; i < 64; ++i) rev[static_cast<unsigned char>(kB64[i])] = i;
  std::string out;
  out.reserve(in.size() / 4 * 3);
  std::uint32_t acc = 0;
  int bits = 0;
  for (char c : in) {
    if (c == '=') break;
    const int v = rev[static_cast<unsigned char>(c)];
    if (v < 0) throw DataError("bank file: invalid base64 payload");
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<char>((acc >> bits) & 0xff));
    }
  }
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::uint64_t scenario_fingerprint(const AncScenario& scenario) {
  std::string buf;
  buf.reserve(64 + 8 * (scenario.primary_path.coefficients.size() +
                        scenario.secondary_path.coefficients.size() +
                        scenario.secondary_path_estimate.coefficients.size()));
  append_u64(buf, static_cast<std::uint64_t>(kPipelineRate));
  append_f64(buf, scenario.step_size);
  append_u64(buf, static_cast<std::uint64_t>(scenario.control_length));
  for (const FirFilter* f :
       {&scenario.primary_path, &scenario.secondary_path, &scenario.secondary_path_estimate}) {
    append_u64(buf, static_cast<std::uint64_t>(f->taps()));
    for (double c : f->coefficients) append_f64(buf, c);
  }
  return fnv1a64(buf.data(), buf.size());
}

FilterBank pretrain_bank(const BandPartition& partition, const AncScenario& scenario,
                         std::uint64_t seed) {
  validate_partition(partition);
  const int n_bands = partition.count();
  const auto n_samples = static_cast<int>(kPretrainSeconds * kPipelineRate);

  FilterBank bank;
  bank.partition = partition;
  bank.sample_rate = kPipelineRate;
  bank.scenario_fingerprint = scenario_fingerprint(scenario);
  bank.filters.resize(static_cast<std::size_t>(n_bands));

  std::vector<std::string> failures(static_cast<std::size_t>(n_bands));
  parallel_for(static_cast<std::size_t>(n_bands), [&](std::size_t b0, std::size_t b1) {
    for (std::size_t b = b0; b < b1; ++b) {
      const auto [lo, hi] = partition.bands[b];
      try {
        Rng rng(mix_seed(seed, b));
        Signal x = band_limited_noise(lo, hi, n_samples, rng);
        // Level the filtered reference at bandwidth/8000 power: uniform modal
        // eigenvalue across bands, so one step size fits all of them.
        const Signal xf = convolve(x, scenario.secondary_path_estimate);
        const double target = static_cast<double>(hi - lo) / 8000.0;
        const double pf = power(xf);
        if (pf > 0.0) {
          const double s = std::sqrt(target / pf);
          for (auto& v : x.samples) v *= s;
        }
        bank.filters[b] = run_fxlms(x, scenario).final_weights;
      } catch (const DivergenceError& e) {
        failures[b] = e.what();
      }
    }
  });

  for (std::size_t b = 0; b < failures.size(); ++b) {
    if (!failures[b].empty())
      throw DivergenceError("pretrain_bank: band " + std::to_string(b) + " diverged: " + failures[b], -1);
  }
  return bank;
}

void save_bank(const FilterBank& bank, const std::string& path) {
  if (bank.filters.empty()) throw ParamError("save_bank: empty bank");
  const int taps = bank.filters.front().taps();

  std::string payload;
  payload.reserve(bank.filters.size() * static_cast<std::size_t>(taps) * 8);
  for (const auto& f : bank.filters) {
    if (f.taps() != taps) throw ParamError("save_bank: filters differ in tap count");
    for (double c : f.coefficients) append_f64(payload, c);
  }

  json header;
  header["magic"] = kBankMagic;
  header["version"] = kBankVersion;
  header["sample_rate"] = bank.sample_rate;
  header["count"] = bank.partition.count();
  header["taps"] = taps;
  json bands = json::array();
  for (const auto& [lo, hi] : bank.partition.bands) bands.push_back({lo, hi});
  header["bands"] = bands;
  header["scenario_fingerprint"] = hex64(bank.scenario_fingerprint);
  header["payload_checksum"] = hex64(fnv1a64(payload.data(), payload.size()));
  header["payload_encoding"] = "base64/float64-le";

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("save_bank: cannot write " + path);
  f << header.dump() << '\n' << b64_encode(payload) << '\n';
  if (!f) throw DataError("save_bank: write failed for " + path);
}

FilterBank load_bank(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("load_bank: cannot open " + path);
  std::string header_line, payload_line;
  if (!std::getline(f, header_line) || !std::getline(f, payload_line))
    throw DataError("load_bank: malformed bank file (truncated): " + path);

  json header;
  try {
    header = json::parse(header_line);
  } catch (const json::exception& e) {
    throw DataError(std::string("load_bank: malformed header: ") + e.what());
  }
  if (header.value("magic", "") != kBankMagic)
    throw DataError("load_bank: not a bank file: " + path);
  if (header.value("version", -1) != kBankVersion)
    throw DataError("load_bank: unsupported bank version " + header.value("version", json()).dump());

  FilterBank bank;
  bank.sample_rate = header.at("sample_rate").get<int>();
  const int count = header.at("count").get<int>();
  const int taps = header.at("taps").get<int>();
  if (count != kNumClasses)
    throw DataError("load_bank: invariant violation, bank holds " + std::to_string(count) +
                    " filters (expected 15)");
  if (taps < 1) throw DataError("load_bank: invalid tap count");
  for (const auto& b : header.at("bands"))
    bank.partition.bands.emplace_back(b.at(0).get<int>(), b.at(1).get<int>());
  if (bank.partition.count() != count)
    throw DataError("load_bank: band list does not match count");
  bank.scenario_fingerprint = std::stoull(header.at("scenario_fingerprint").get<std::string>(), nullptr, 16);

  const std::string payload = b64_decode(payload_line);
  const std::size_t want = static_cast<std::size_t>(count) * static_cast<std::size_t>(taps) * 8;
  if (payload.size() != want)
    throw DataError("load_bank: malformed payload (got " + std::to_string(payload.size()) +
                    " bytes, expected " + std::to_string(want) + ")");
  const std::uint64_t checksum = std::stoull(header.at("payload_checksum").get<std::string>(), nullptr, 16);
  if (fnv1a64(payload.data(), payload.size()) != checksum)
    throw DataError("load_bank: payload checksum failure");

  bank.filters.resize(static_cast<std::size_t>(count));
  std::size_t off = 0;
  for (auto& filt : bank.filters) {
    filt.coefficients.resize(static_cast<std::size_t>(taps));
    for (auto& c : filt.coefficients) {
      std::uint64_t bits = 0;
      for (int i = 0; i < 8; ++i)
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(payload[off + static_cast<std::size_t>(i)])) << (8 * i);
      std::memcpy(&c, &bits, 8);
      off += 8;
    }
  }
  return bank;
}

}  // namespace sfanc
