#include "mkv/panel_io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "mkv/errors.hpp"

namespace mkv {

namespace {

constexpr char kMagic[4] = {'M', 'K', 'V', 'P'};
constexpr std::uint8_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "MKVP writer assumes a little-endian host");

void format_double(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

double parse_double(const std::string& token, std::size_t line) {
    double v = 0.0;
    const char* begin = token.data();
    const char* end = begin + token.size();
    const auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc{} || res.ptr != end)
        throw error("panel csv: cannot parse number '" + token + "' on line " +
                    std::to_string(line));
    return v;
}

template <typename T>
void write_raw(std::ostream& os, const T& value) {
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is) {
    T value{};
    is.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!is) throw error("panel mkvp: truncated file");
    return value;
}

} // namespace

void write_panel_csv(const TrajectoryPanel& panel, std::ostream& os) {
    std::string line;
    line = "time";
    for (std::size_t i = 1; i <= panel.N; ++i) line += ",x" + std::to_string(i);
    line += "\n";
    os << line;
    for (std::size_t j = 0; j <= panel.grid.n; ++j) {
        line.clear();
        format_double(line, static_cast<double>(j) * panel.grid.delta_n);
        for (std::size_t i = 0; i < panel.N; ++i) {
            line += ',';
            format_double(line, panel.at(i, j));
        }
        line += "\n";
        os << line;
    }
}

TrajectoryPanel read_panel_csv(std::istream& is) {
    std::string header;
    if (!std::getline(is, header)) throw error("panel csv: empty input");
    std::size_t N = 0;
    {
        std::stringstream hs(header);
        std::string field;
        if (!std::getline(hs, field, ',') || field != "time")
            throw error("panel csv: first header field must be 'time'");
        while (std::getline(hs, field, ',')) ++N;
    }
    if (N == 0) throw error("panel csv: no particle columns");

    std::vector<std::vector<double>> rows;
    std::vector<double> times;
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::string token;
        std::vector<double> row;
        row.reserve(N);
        if (!std::getline(ls, token, ',')) throw error("panel csv: malformed row");
        times.push_back(parse_double(token, lineno));
        while (std::getline(ls, token, ',')) row.push_back(parse_double(token, lineno));
        if (row.size() != N)
            throw error("panel csv: line " + std::to_string(lineno) + " has " +
                        std::to_string(row.size()) + " values, expected " + std::to_string(N));
        rows.push_back(std::move(row));
    }
    if (rows.size() < 2) throw error("panel csv: need at least two grid times");
    const std::size_t n = rows.size() - 1;
    const double delta_n = times[1];
    if (!(delta_n > 0.0)) throw error("panel csv: non-increasing time grid");
    for (std::size_t j = 0; j <= n; ++j)
        if (std::abs(times[j] - static_cast<double>(j) * delta_n) >
            1e-9 * std::max(1.0, times.back()))
            throw error("panel csv: time grid is not equidistant at row " + std::to_string(j));

    TrajectoryPanel panel;
    panel.N = N;
    panel.grid = ObservationGrid{n, delta_n};
    panel.data.resize(N * (n + 1));
    for (std::size_t j = 0; j <= n; ++j)
        for (std::size_t i = 0; i < N; ++i) panel.at(i, j) = rows[j][i];
    return panel;
}

void write_panel_mkvp(const TrajectoryPanel& panel, std::ostream& os) {
    os.write(kMagic, 4);
    write_raw(os, kVersion);
    write_raw(os, static_cast<std::uint64_t>(panel.N));
    write_raw(os, static_cast<std::uint64_t>(panel.grid.n));
    write_raw(os, panel.grid.horizon());
    os.write(reinterpret_cast<const char*>(panel.data.data()),
             static_cast<std::streamsize>(panel.data.size() * sizeof(double)));
}

TrajectoryPanel read_panel_mkvp(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) throw error("panel mkvp: bad magic");
    const auto version = read_raw<std::uint8_t>(is);
    if (version != kVersion)
        throw error("panel mkvp: unsupported version " + std::to_string(version));
    const auto N = read_raw<std::uint64_t>(is);
    const auto n = read_raw<std::uint64_t>(is);
    const auto T = read_raw<double>(is);
    if (N == 0 || n == 0 || !(T > 0.0)) throw error("panel mkvp: invalid header");

    TrajectoryPanel panel;
    panel.N = static_cast<std::size_t>(N);
    panel.grid = ObservationGrid{static_cast<std::size_t>(n), T / static_cast<double>(n)};
    panel.data.resize(panel.N * (panel.grid.n + 1));
    is.read(reinterpret_cast<char*>(panel.data.data()),
            static_cast<std::streamsize>(panel.data.size() * sizeof(double)));
    if (!is) throw error("panel mkvp: truncated payload");
    return panel;
}

void save_panel(const TrajectoryPanel& panel, const std::string& path) {
    const bool binary = path.size() >= 5 && path.substr(path.size() - 5) == ".mkvp";
    std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
    if (!os) throw error("save_panel: cannot open '" + path + "'");
    if (binary)
        write_panel_mkvp(panel, os);
    else
        write_panel_csv(panel, os);
}

TrajectoryPanel load_panel(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw error("load_panel: cannot open '" + path + "'");
    char magic[4] = {};
    probe.read(magic, 4);
    probe.close();
    if (std::memcmp(magic, kMagic, 4) == 0) {
        std::ifstream is(path, std::ios::binary);
        return read_panel_mkvp(is);
    }
    std::ifstream is(path);
    return read_panel_csv(is);
}

} // namespace mkv
