#pragma once

// Ensemble files (CSV and the "ETE1" binary layout), JSON result documents
// and plot-data CSVs.

#include <array>
#include <bit>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "ete/ensemble.hpp"
#include "ete/error.hpp"
#include "ete/inference.hpp"

#ifndef ETE_VERSION
#define ETE_VERSION "0.0.0"
#endif

namespace ete {

inline constexpr std::string_view kToolVersion = ETE_VERSION;

enum class FileFormat { csv, bin };

// Chooses the format from the extension: ".bin" or ".ete" is binary,
// everything else CSV.
inline FileFormat format_for(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return (ext == ".bin" || ext == ".ete") ? FileFormat::bin : FileFormat::csv;
}

// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_commas(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
T parse_number(const std::string& field, const std::string& where) {
  T v{};
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
    throw Error(ErrorCode::ParseError, where + ": cannot parse '" + field + "'");
  }
  return v;
}

inline void write_u32(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t read_u32(std::istream& is, const std::string& what) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) {
    throw Error(ErrorCode::ParseError, "truncated file at offset " + std::to_string(is.gcount()) + " reading " + what);
  }
  return std::uint32_t{b[0]} | std::uint32_t{b[1]} << 8 | std::uint32_t{b[2]} << 16 | std::uint32_t{b[3]} << 24;
}

inline std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
  std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  return os;
}

inline std::ifstream open_in(const std::filesystem::path& path, bool binary = false) {
  std::ifstream is(path, binary ? std::ios::binary : std::ios::in);
  if (!is) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return is;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// CSV: header "rep,t,value", 1-based rep and t, rows in any order.
// ---------------------------------------------------------------------------

inline EnsembleSeries read_csv(std::istream& is, const std::string& name) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!detail::trim(line).empty()) break;
  }
  if (detail::split_commas(line) != std::vector<std::string>{"rep", "t", "value"}) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected header 'rep,t,value'");
  }
  std::map<std::pair<std::uint64_t, std::uint64_t>, double> cells;
  std::uint64_t max_rep = 0, max_t = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    const auto f = detail::split_commas(line);
    if (f.size() != 3) throw Error(ErrorCode::ParseError, where + ": expected 3 fields, got " + std::to_string(f.size()));
    const auto rep = detail::parse_number<std::uint64_t>(f[0], where);
    const auto t = detail::parse_number<std::uint64_t>(f[1], where);
    const auto v = detail::parse_number<double>(f[2], where);
    if (rep < 1 || t < 1) throw Error(ErrorCode::ParseError, where + ": rep and t are 1-based");
    if (!cells.emplace(std::pair{rep, t}, v).second) {
      throw Error(ErrorCode::ParseError, where + ": duplicate cell (" + f[0] + "," + f[1] + ")");
    }
    max_rep = std::max(max_rep, rep);
    max_t = std::max(max_t, t);
  }
  if (cells.empty()) throw Error(ErrorCode::EmptyEnsemble, name + ": no data rows");
  std::vector<double> values;
  values.reserve(max_rep * max_t);
  for (std::uint64_t r = 1; r <= max_rep; ++r) {
    for (std::uint64_t t = 1; t <= max_t; ++t) {
      const auto it = cells.find({r, t});
      if (it == cells.end()) {
        throw Error(ErrorCode::GridIncomplete,
                    name + ": missing cell (" + std::to_string(r) + "," + std::to_string(t) + ")");
      }
      values.push_back(it->second);
    }
  }
  EnsembleSeries s(name, max_rep, max_t, std::move(values));
  require_valid(s);
  return s;
}

inline void write_csv(std::ostream& os, const EnsembleSeries& s) {
  os << "rep,t,value\n";
  for (std::size_t r = 0; r < s.n_repetitions(); ++r) {
    for (std::size_t c = 0; c < s.n_samples(); ++c) {
      os << (r + 1) << ',' << (c + 1) << ',' << format_double(s.value(r, c)) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Binary: "ETE1", u32 R, u32 N, u32 name length, name, R*N f64 (all
// little-endian, repetition-major).
// ---------------------------------------------------------------------------

inline void write_bin(std::ostream& os, const EnsembleSeries& s) {
  os.write("ETE1", 4);
  detail::write_u32(os, static_cast<std::uint32_t>(s.n_repetitions()));
  detail::write_u32(os, static_cast<std::uint32_t>(s.n_samples()));
  detail::write_u32(os, static_cast<std::uint32_t>(s.name().size()));
  os.write(s.name().data(), static_cast<std::streamsize>(s.name().size()));
  for (double v : s.values()) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i, bits >>= 8) b[i] = static_cast<unsigned char>(bits);
    os.write(reinterpret_cast<const char*>(b), 8);
  }
}

inline EnsembleSeries read_bin(std::istream& is) {
  char magic[4] = {};
  if (!is.read(magic, 4)) throw Error(ErrorCode::ParseError, "offset 0: file shorter than the magic bytes");
  if (std::memcmp(magic, "ETE1", 4) != 0) {
    throw Error(ErrorCode::MagicMismatch, "expected magic 'ETE1', found '" + std::string(magic, 4) + "'");
  }
  const std::uint32_t reps = detail::read_u32(is, "R");
  const std::uint32_t n = detail::read_u32(is, "N");
  const std::uint32_t name_len = detail::read_u32(is, "name length");
  std::string name(name_len, '\0');
  if (!is.read(name.data(), name_len)) throw Error(ErrorCode::ParseError, "offset 16: truncated name");
  const std::uint64_t count = std::uint64_t{reps} * n;
  std::vector<double> values(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) {
      throw Error(ErrorCode::ParseError,
                  "offset " + std::to_string(16 + name_len + 8 * i) + ": truncated data (value " + std::to_string(i) +
                      " of " + std::to_string(count) + ")");
    }
    std::uint64_t bits = 0;
    for (int k = 7; k >= 0; --k) bits = bits << 8 | b[k];
    values[i] = std::bit_cast<double>(bits);
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorCode::ParseError, "offset " + std::to_string(16 + name_len + 8 * count) + ": trailing bytes");
  }
  EnsembleSeries s(std::move(name), reps, n, std::move(values));
  require_valid(s);
  return s;
}

inline EnsembleSeries load_ensemble(const std::filesystem::path& path, FileFormat format) {
  auto is = detail::open_in(path, format == FileFormat::bin);
  if (format == FileFormat::bin) return read_bin(is);
  return read_csv(is, path.stem().string());
}

inline EnsembleSeries load_ensemble(const std::filesystem::path& path) { return load_ensemble(path, format_for(path)); }

inline void save_ensemble(const EnsembleSeries& s, const std::filesystem::path& path, FileFormat format) {
  auto os = detail::open_out(path, format == FileFormat::bin);
  if (format == FileFormat::bin) {
    write_bin(os, s);
  } else {
    write_csv(os, s);
  }
  if (!os) throw Error(ErrorCode::IoError, "write to " + path.string() + " failed");
}

inline void save_ensemble(const EnsembleSeries& s, const std::filesystem::path& path) {
  save_ensemble(s, path, format_for(path));
}

// ---------------------------------------------------------------------------
// JSON results
// ---------------------------------------------------------------------------

using Json = nlohmann::ordered_json;

inline Json to_json(const AnalysisConfig& c) {
  Json j;
  j["k"] = c.k;
  j["u_candidates"] = c.u_candidates;
  j["window"] = {c.window.first, c.window.last};
  j["n_surrogates"] = c.n_surrogates;
  j["alpha"] = c.alpha;
  j["correction"] = to_string(c.correction);
  j["seed"] = c.seed;
  j["jitter_amplitude"] = c.jitter_amplitude;
  j["strict_permutation"] = c.strict_permutation;
  j["pvalue_mode"] = c.pvalue_mode == PValueMode::plus_one ? "plus_one" : "proportion";
  return j;
}

inline AnalysisConfig config_from_json(const Json& j) {
  AnalysisConfig c;
  c.k = j.at("k").get<std::size_t>();
  c.u_candidates = j.at("u_candidates").get<std::vector<std::size_t>>();
  c.window = {j.at("window").at(0).get<Sample>(), j.at("window").at(1).get<Sample>()};
  c.n_surrogates = j.at("n_surrogates").get<std::size_t>();
  c.alpha = j.at("alpha").get<double>();
  c.correction = parse_correction(j.at("correction").get<std::string>());
  c.seed = j.at("seed").get<std::uint64_t>();
  c.jitter_amplitude = j.at("jitter_amplitude").get<double>();
  c.strict_permutation = j.at("strict_permutation").get<bool>();
  c.pvalue_mode = j.at("pvalue_mode").get<std::string>() == "plus_one" ? PValueMode::plus_one : PValueMode::proportion;
  return c;
}

inline Json to_json(const TEResult& r, const AnalysisConfig& config) {
  Json j;
  j["source"] = r.source;
  j["target"] = r.target;
  j["window"] = {r.window.first, r.window.last};
  j["u_selected"] = r.u_selected;
  j["te_value"] = r.te_value;
  j["p_value"] = r.p_value;
  j["significant"] = r.significant;
  j["significant_corrected"] = r.significant_corrected;
  j["te_minus_median_surrogate"] = r.te_minus_median_surrogate;
  Json curve = Json::array();
  for (const auto& [u, te] : r.te_curve) curve.push_back({u, te});
  j["te_curve"] = curve;
  j["volume_conduction"] = false;
  j["source_embedding"] = {{"dim", r.source_embedding.dim}, {"delay", r.source_embedding.delay}};
  j["target_embedding"] = {{"dim", r.target_embedding.dim}, {"delay", r.target_embedding.delay}};
  j["surrogate_values"] = r.surrogate_values;
  j["units"] = "nats";
  j["seed"] = config.seed;
  j["tool_version"] = std::string(kToolVersion);
  j["config"] = to_json(config);
  return j;
}

inline TEResult result_from_json(const Json& j) {
  TEResult r;
  r.source = j.at("source").get<std::string>();
  r.target = j.at("target").get<std::string>();
  r.window = {j.at("window").at(0).get<Sample>(), j.at("window").at(1).get<Sample>()};
  r.u_selected = j.at("u_selected").get<std::size_t>();
  r.te_value = j.at("te_value").get<double>();
  r.p_value = j.at("p_value").get<double>();
  r.significant = j.at("significant").get<bool>();
  r.significant_corrected = j.at("significant_corrected").get<bool>();
  r.te_minus_median_surrogate = j.at("te_minus_median_surrogate").get<double>();
  for (const auto& p : j.at("te_curve")) r.te_curve.emplace_back(p.at(0).get<std::size_t>(), p.at(1).get<double>());
  r.source_embedding = {j.at("source_embedding").at("dim").get<std::size_t>(),
                        j.at("source_embedding").at("delay").get<std::size_t>()};
  r.target_embedding = {j.at("target_embedding").at("dim").get<std::size_t>(),
                        j.at("target_embedding").at("delay").get<std::size_t>()};
  r.surrogate_values = j.at("surrogate_values").get<std::vector<double>>();
  return r;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// The timestamp is the only field that differs between identical runs.
inline Json results_document(const std::vector<TEResult>& results, const AnalysisConfig& config,
                             const std::string& timestamp = utc_timestamp()) {
  if (results.empty()) throw Error(ErrorCode::InvalidArgument, "no results to write");
  Json doc;
  doc["tool"] = "ete";
  doc["tool_version"] = std::string(kToolVersion);
  doc["timestamp"] = timestamp;
  doc["units"] = "nats";
  doc["config"] = to_json(config);
  Json arr = Json::array();
  for (const auto& r : results) arr.push_back(to_json(r, config));
  doc["results"] = arr;
  return doc;
}

inline void write_results(const std::vector<TEResult>& results, const AnalysisConfig& config,
                          const std::filesystem::path& path) {
  const Json doc = results_document(results, config);
  auto os = detail::open_out(path);
  os << doc.dump(2) << '\n';
  if (!os) throw Error(ErrorCode::IoError, "write to " + path.string() + " failed");
}

struct ResultDocument {
  std::vector<TEResult> results;
  AnalysisConfig config;
  std::string tool_version;
  std::string timestamp;
};

inline ResultDocument read_results(const std::filesystem::path& path) {
  auto is = detail::open_in(path);
  Json doc;
  try {
    doc = Json::parse(is);
    ResultDocument out;
    out.config = config_from_json(doc.at("config"));
    out.tool_version = doc.at("tool_version").get<std::string>();
    out.timestamp = doc.at("timestamp").get<std::string>();
    for (const auto& r : doc.at("results")) out.results.push_back(result_from_json(r));
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Plot data
// ---------------------------------------------------------------------------

inline void write_curve_csv(std::ostream& os, const std::vector<TEResult>& results) {
  os << "source,target,window_first,window_last,u,te\n";
  for (const auto& r : results) {
    for (const auto& [u, te] : r.te_curve) {
      os << r.source << ',' << r.target << ',' << r.window.first << ',' << r.window.last << ',' << u << ','
         << format_double(te) << '\n';
    }
  }
}

}  // namespace ete
