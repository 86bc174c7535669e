#include "stocycle/chain_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "stocycle/csv.hpp"
#include "stocycle/errors.hpp"

namespace stocycle {

Dimensions dimensions_from_names(std::span<const std::string> names) {
  auto count_prefix = [&](std::string_view prefix) {
    std::size_t c = 0;
    for (const auto& n : names) {
      if (n.size() > prefix.size() && n.compare(0, prefix.size(), prefix) == 0 &&
          std::isdigit(static_cast<unsigned char>(n[prefix.size()]))) {
        ++c;
      }
    }
    return c;
  };
  Dimensions d{count_prefix("lambda"), count_prefix("phi"), 0};
  const std::size_t betas = count_prefix("beta");
  if (d.k == 0 || betas == 0) throw DataError("chain file: missing lambda or beta columns");
  d.r = betas - 1;
  const auto expected = parameter_names(d);
  if (expected.size() != names.size() || !std::equal(expected.begin(), expected.end(), names.begin())) {
    throw DataError("chain file: parameter columns are not in canonical order");
  }
  return d;
}

void write_chain_csv(std::ostream& os, std::span<const ChainOutput> chains) {
  if (chains.empty()) throw std::invalid_argument("write_chain_csv: no chains");
  std::vector<std::string> header{"chain", "draw"};
  header.insert(header.end(), chains.front().names.begin(), chains.front().names.end());
  header.emplace_back("log_posterior");
  write_csv_row(os, header);
  std::vector<std::string> fields;
  for (const auto& c : chains) {
    for (Eigen::Index r = 0; r < c.draws.rows(); ++r) {
      fields.clear();
      fields.push_back(std::to_string(c.chain_index));
      fields.push_back(std::to_string(r));
      for (Eigen::Index j = 0; j < c.draws.cols(); ++j) fields.push_back(format_double(c.draws(r, j)));
      fields.push_back(format_double(c.log_posterior[static_cast<std::size_t>(r)]));
      write_csv_row(os, fields);
    }
  }
}

void write_chain_csv(const std::filesystem::path& path, std::span<const ChainOutput> chains) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write_chain_csv(out, chains);
}

std::vector<ChainOutput> read_chain_csv(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  if (table.header.size() < 4 || table.header[0] != "chain" || table.header[1] != "draw" ||
      table.header.back() != "log_posterior") {
    throw DataError("chain file '" + path.string() + "': unexpected header");
  }
  const std::vector<std::string> names(table.header.begin() + 2, table.header.end() - 1);
  const auto dims = dimensions_from_names(names);

  std::map<std::size_t, std::vector<std::vector<double>>> rows;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row.size() != table.header.size()) {
      throw DataError("chain file: wrong field count in data row " + std::to_string(r + 1));
    }
    std::vector<double> vals;
    for (const auto& cell : row) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
        throw DataError("chain file: non-numeric value in data row " + std::to_string(r + 1));
      }
      vals.push_back(v);
    }
    rows[static_cast<std::size_t>(vals[0])].push_back(std::move(vals));
  }
  std::vector<ChainOutput> out;
  for (auto& [id, rs] : rows) {
    ChainOutput c;
    c.dims = dims;
    c.names = names;
    c.chain_index = id;
    c.draws.resize(static_cast<Eigen::Index>(rs.size()), static_cast<Eigen::Index>(names.size()));
    for (std::size_t r = 0; r < rs.size(); ++r) {
      for (std::size_t j = 0; j < names.size(); ++j) {
        c.draws(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = rs[r][j + 2];
      }
      c.log_posterior.push_back(rs[r].back());
    }
    out.push_back(std::move(c));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'S', 'C', 'S', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw DataError("state file: truncated");
  return v;
}

void put_vector(std::ostream& os, std::span<const double> v) {
  put<std::uint64_t>(os, v.size());
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> get_vector(std::istream& is) {
  const auto n = get<std::uint64_t>(is);
  if (n > (1u << 26)) throw DataError("state file: implausible vector length");
  std::vector<double> v(n);
  if (!is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)))) {
    throw DataError("state file: truncated");
  }
  return v;
}

}  // namespace

void write_states(std::ostream& os, std::span<const SamplerState> states) {
  os.write(kMagic, 4);
  put(os, kVersion);
  put<std::uint64_t>(os, states.size());
  for (const auto& s : states) {
    put<std::uint64_t>(os, s.dims.k);
    put<std::uint64_t>(os, s.dims.p);
    put<std::uint64_t>(os, s.dims.r);
    put<std::uint64_t>(os, s.iteration);
    put(os, s.omega);
    put_vector(os, s.z);
    put_vector(os, s.log_scales);
    put<std::uint64_t>(os, s.covariances.size());
    for (const auto& m : s.covariances) {
      put<std::uint64_t>(os, static_cast<std::uint64_t>(m.rows()));
      put_vector(os, std::span<const double>(m.data(), static_cast<std::size_t>(m.size())));
    }
    put<std::uint64_t>(os, s.rng_state.size());
    os.write(s.rng_state.data(), static_cast<std::streamsize>(s.rng_state.size()));
  }
}

std::vector<SamplerState> read_states(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw DataError("state file: bad magic");
  if (get<std::uint32_t>(is) != kVersion) throw DataError("state file: unsupported version");
  const auto count = get<std::uint64_t>(is);
  if (count > 1024) throw DataError("state file: implausible chain count");
  std::vector<SamplerState> out(count);
  for (auto& s : out) {
    s.dims.k = get<std::uint64_t>(is);
    s.dims.p = get<std::uint64_t>(is);
    s.dims.r = get<std::uint64_t>(is);
    s.iteration = get<std::uint64_t>(is);
    s.omega = get<double>(is);
    s.z = get_vector(is);
    s.log_scales = get_vector(is);
    const auto blocks = get<std::uint64_t>(is);
    if (blocks > 1024) throw DataError("state file: implausible block count");
    for (std::uint64_t b = 0; b < blocks; ++b) {
      const auto rows = static_cast<Eigen::Index>(get<std::uint64_t>(is));
      const auto data = get_vector(is);
      if (static_cast<std::size_t>(rows * rows) != data.size()) throw DataError("state file: bad matrix");
      s.covariances.push_back(Eigen::Map<const Eigen::MatrixXd>(data.data(), rows, rows));
    }
    const auto len = get<std::uint64_t>(is);
    if (len > (1u << 20)) throw DataError("state file: implausible RNG state");
    s.rng_state.resize(len);
    if (!is.read(s.rng_state.data(), static_cast<std::streamsize>(len))) throw DataError("state file: truncated");
  }
  return out;
}

void save_states(const std::filesystem::path& path, std::span<const SamplerState> states) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write_states(out, states);
}

std::vector<SamplerState> load_states(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return read_states(in);
}

}  // namespace stocycle
