#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sdelab/laws.hpp"

namespace sdelab {

// Shortest round-trip decimal form (to_chars); used for every number that
// lands in a CSV file so outputs are byte-stable across runs and platforms
// that share IEEE doubles.
std::string format_double(double v);

std::string hex_hash(std::uint64_t h);

std::string method_name(TwoSampleMethod m);

// Rows of comma-separated cells. No quoting: cells produced by this code
// never contain commas or newlines.
class Csv {
  public:
    explicit Csv(const std::vector<std::string>& header);
    Csv& cell(const std::string& s);
    Csv& cell(const char* s) { return cell(std::string(s)); }
    Csv& cell(double v) { return cell(format_double(v)); }
    Csv& cell(std::int64_t v) { return cell(std::to_string(v)); }
    Csv& cell(int v) { return cell(std::to_string(v)); }
    void endrow();
    const std::string& str() const { return out_; }

  private:
    std::string out_;
    bool row_open_ = false;
};

// Files written through an ArtifactSet are deleted on destruction unless
// commit() ran, so a command that throws leaves no partial outputs behind.
class ArtifactSet {
  public:
    explicit ArtifactSet(std::filesystem::path dir);
    ArtifactSet(const ArtifactSet&) = delete;
    ArtifactSet& operator=(const ArtifactSet&) = delete;
    ~ArtifactSet();

    const std::filesystem::path& dir() const { return dir_; }
    std::filesystem::path write_text(const std::string& filename,
                                     const std::string& text);
    void commit() { committed_ = true; }

  private:
    std::filesystem::path dir_;
    std::vector<std::filesystem::path> files_;
    bool committed_ = false;
};

std::string two_sample_csv(const std::vector<UniquenessRow>& rows);
std::string occupation_csv(const std::vector<OccupationEntry>& entries);

}  // namespace sdelab
