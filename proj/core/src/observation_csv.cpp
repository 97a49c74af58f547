#include "rankinfer/errors.hpp"
#include "rankinfer/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace rankinfer {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        std::size_t start = 0;
        while (start < cell.size() && cell[start] == ' ') ++start;
        out.push_back(cell.substr(start));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& s, std::size_t row) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw InputError("row " + std::to_string(row) + ": cannot parse '" + s + "' as a number");
    }
}

} // namespace

void write_observations_csv(const ObservationSet& obs, std::ostream& out) {
    out << "time";
    for (std::size_t j = 0; j < obs.d; ++j) out << ",asset_" << (j + 1);
    out << '\n';
    char buf[32];
    for (std::size_t i = 0; i <= obs.n; ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", obs.times[i]);
        out << buf;
        for (std::size_t j = 0; j < obs.d; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", obs.value(i, j));
            out << ',' << buf;
        }
        out << '\n';
    }
}

void write_observations_csv(const ObservationSet& obs, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw InputError("cannot open '" + path + "' for writing");
    write_observations_csv(obs, f);
    if (!f) throw InputError("failed writing '" + path + "'");
}

ObservationSet read_observations_csv(std::istream& in, std::string source) {
    std::string line;
    if (!std::getline(in, line)) throw InputError("empty observation CSV");
    const auto header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "time") {
        throw InputError("observation CSV header must be time,asset_1,...,asset_d");
    }
    const std::size_t d = header.size() - 1;
    std::vector<double> times;
    std::vector<double> values;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != d + 1) {
            throw InputError("row " + std::to_string(row) + ": expected " + std::to_string(d + 1) + " columns");
        }
        times.push_back(parse_number(cells[0], row));
        for (std::size_t j = 1; j <= d; ++j) values.push_back(parse_number(cells[j], row));
    }
    if (times.size() < 2) throw InputError("observation CSV needs at least two rows");
    const std::size_t n = times.size() - 1;
    for (std::size_t i = 0; i <= n; ++i) {
        const double expected = static_cast<double>(i) / static_cast<double>(n);
        if (std::abs(times[i] - expected) > 1e-9) {
            throw InputError("time column must be the uniform grid i/n; row " + std::to_string(i + 2) +
                             " has " + std::to_string(times[i]));
        }
    }
    return make_observations(d, std::move(values), std::move(source));
}

ObservationSet read_observations_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open '" + path + "'");
    return read_observations_csv(f, path);
}

} // namespace rankinfer
