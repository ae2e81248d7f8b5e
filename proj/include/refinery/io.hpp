#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "refinery/document.hpp"

namespace refinery {

/// Writes to a sibling temporary file; commit() renames it over the target.
/// Destroying an uncommitted file removes the temporary, so readers never see
/// a truncated target.
class AtomicFile {
public:
    explicit AtomicFile(std::filesystem::path target);
    ~AtomicFile();

    AtomicFile(const AtomicFile&) = delete;
    AtomicFile& operator=(const AtomicFile&) = delete;

    std::ofstream& stream() { return out_; }
    const std::filesystem::path& temp_path() const { return temp_; }
    void commit();

private:
    std::filesystem::path target_;
    std::filesystem::path temp_;
    std::ofstream out_;
    bool committed_ = false;
};

void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Streaming Zstandard compressor writing a single frame through an AtomicFile.
class ZstdWriter {
public:
    ZstdWriter(std::filesystem::path target, int level);
    ~ZstdWriter();

    ZstdWriter(const ZstdWriter&) = delete;
    ZstdWriter& operator=(const ZstdWriter&) = delete;

    void write(std::string_view bytes);
    /// Flushes the frame epilogue and renames into place. Returns compressed size.
    std::uint64_t finish();

    std::uint64_t uncompressed_bytes() const { return uncompressed_; }

private:
    void pump(std::string_view bytes, bool end);

    AtomicFile file_;
    struct Ctx;
    std::unique_ptr<Ctx> ctx_;
    std::uint64_t uncompressed_ = 0;
    std::uint64_t compressed_ = 0;
};

/// Calls `sink` for every line of `path` (decompressing when the name ends in
/// .zst). Line numbers start at 1. A trailing '\r' is kept; the JSON parser
/// treats it as whitespace.
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::string_view line, std::size_t line_no)>& sink);

/// Reads a JSON Lines document file. Blank lines are skipped; errors are
/// rethrown with the file name and line number prepended.
std::vector<Document> read_documents(const std::filesystem::path& path);

std::vector<Document> read_documents(const std::vector<std::filesystem::path>& paths);

/// Writes one document per line, atomically. Compressed when the name ends in .zst.
void write_documents(const std::filesystem::path& path, const std::vector<Document>& documents,
                     int zstd_level = 3);

void write_json_lines(const std::filesystem::path& path, const std::vector<Json>& records);

Json read_json_file(const std::filesystem::path& path);

bool has_zst_suffix(const std::filesystem::path& path);

}  // namespace refinery
