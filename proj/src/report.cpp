#include "sdelab/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <system_error>

#include "sdelab/errors.hpp"

namespace sdelab {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string hex_hash(std::uint64_t h) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return s;
}

std::string method_name(TwoSampleMethod m) {
    switch (m) {
        case TwoSampleMethod::KSPerCoordinate: return "ks_coordinate";
        case TwoSampleMethod::KSRadial: return "ks_radial";
        case TwoSampleMethod::EnergyDistancePermutation: return "energy";
    }
    return "unknown";
}

Csv::Csv(const std::vector<std::string>& header) {
    for (const std::string& h : header) cell(h);
    endrow();
}

Csv& Csv::cell(const std::string& s) {
    if (row_open_) out_ += ',';
    out_ += s;
    row_open_ = true;
    return *this;
}

void Csv::endrow() {
    out_ += '\n';
    row_open_ = false;
}

ArtifactSet::ArtifactSet(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw ConfigError("cannot create output dir: " + dir_.string());
}

ArtifactSet::~ArtifactSet() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& f : files_) std::filesystem::remove(f, ec);
}

std::filesystem::path ArtifactSet::write_text(const std::string& filename,
                                              const std::string& text) {
    const std::filesystem::path path = dir_ / filename;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
    out.close();
    if (!out) throw ConfigError("failed writing " + path.string());
    files_.push_back(path);
    return path;
}

std::string two_sample_csv(const std::vector<UniquenessRow>& rows) {
    Csv csv({"time", "method", "coordinate", "statistic", "p_value", "n1",
             "n2", "n_used1", "n_used2"});
    for (const UniquenessRow& row : rows) {
        for (const TwoSampleResult& t : row.tests) {
            csv.cell(row.t)
                .cell(method_name(t.method))
                .cell(t.coordinate)
                .cell(t.statistic)
                .cell(t.p_value)
                .cell(t.n1)
                .cell(t.n2)
                .cell(t.n_used1)
                .cell(t.n_used2);
            csv.endrow();
        }
    }
    return csv.str();
}

std::string occupation_csv(const std::vector<OccupationEntry>& entries) {
    Csv csv({"eps", "mean", "ci95"});
    for (const OccupationEntry& e : entries) {
        csv.cell(e.eps).cell(e.mean).cell(e.ci95);
        csv.endrow();
    }
    return csv.str();
}

}  // namespace sdelab
