#include "refinery/io.hpp"

#include <unistd.h>

#include <atomic>
#include <sstream>

#include <zstd.h>

#include "refinery/errors.hpp"

namespace refinery {

namespace fs = std::filesystem;

namespace {

std::atomic<std::uint64_t> temp_counter{0};

fs::path make_temp_path(const fs::path& target) {
    auto name = target.filename().string();
    name = "." + name + ".tmp-" + std::to_string(::getpid()) + "-" + std::to_string(temp_counter++);
    return target.parent_path() / name;
}

}  // namespace

AtomicFile::AtomicFile(fs::path target) : target_(std::move(target)), temp_(make_temp_path(target_)) {
    if (target_.has_parent_path()) fs::create_directories(target_.parent_path());
    out_.open(temp_, std::ios::binary | std::ios::trunc);
    if (!out_) throw IoError("cannot open " + temp_.string() + " for writing");
}

AtomicFile::~AtomicFile() {
    if (!committed_) {
        out_.close();
        std::error_code ec;
        fs::remove(temp_, ec);
    }
}

void AtomicFile::commit() {
    out_.flush();
    if (!out_) throw IoError("write failed for " + temp_.string());
    out_.close();
    fs::rename(temp_, target_);
    committed_ = true;
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
    AtomicFile file(path);
    file.stream().write(contents.data(), static_cast<std::streamsize>(contents.size()));
    file.commit();
}

struct ZstdWriter::Ctx {
    ZSTD_CCtx* cctx = nullptr;
    std::vector<char> out_buffer;
    ~Ctx() { ZSTD_freeCCtx(cctx); }
};

ZstdWriter::ZstdWriter(fs::path target, int level) : file_(std::move(target)), ctx_(std::make_unique<Ctx>()) {
    ctx_->cctx = ZSTD_createCCtx();
    if (ctx_->cctx == nullptr) throw IoError("ZSTD_createCCtx failed");
    ZSTD_CCtx_setParameter(ctx_->cctx, ZSTD_c_compressionLevel, level);
    ZSTD_CCtx_setParameter(ctx_->cctx, ZSTD_c_checksumFlag, 1);
    ctx_->out_buffer.resize(ZSTD_CStreamOutSize());
}

ZstdWriter::~ZstdWriter() = default;

void ZstdWriter::pump(std::string_view bytes, bool end) {
    ZSTD_inBuffer in{bytes.data(), bytes.size(), 0};
    const auto mode = end ? ZSTD_e_end : ZSTD_e_continue;
    for (;;) {
        ZSTD_outBuffer out{ctx_->out_buffer.data(), ctx_->out_buffer.size(), 0};
        const std::size_t remaining = ZSTD_compressStream2(ctx_->cctx, &out, &in, mode);
        if (ZSTD_isError(remaining)) throw IoError(std::string("zstd compression failed: ") + ZSTD_getErrorName(remaining));
        file_.stream().write(ctx_->out_buffer.data(), static_cast<std::streamsize>(out.pos));
        compressed_ += out.pos;
        if (end ? remaining == 0 : in.pos == in.size) break;
    }
}

void ZstdWriter::write(std::string_view bytes) {
    uncompressed_ += bytes.size();
    pump(bytes, false);
}

std::uint64_t ZstdWriter::finish() {
    pump({}, true);
    file_.commit();
    return compressed_;
}

bool has_zst_suffix(const fs::path& path) { return path.extension() == ".zst"; }

namespace {

// Feeds decompressed bytes to `consume`, tracking frame boundaries for error reports.
void decompress_file(const fs::path& path, const std::function<void(std::string_view)>& consume) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::unique_ptr<ZSTD_DCtx, decltype(&ZSTD_freeDCtx)> dctx(ZSTD_createDCtx(), ZSTD_freeDCtx);
    std::vector<char> in_buf(ZSTD_DStreamInSize());
    std::vector<char> out_buf(ZSTD_DStreamOutSize());
    std::size_t consumed_total = 0;  // bytes of compressed input fully handed to zstd
    std::size_t frame_start = 0;
    std::size_t last_ret = 0;
    bool any_input = false;
    while (in) {
        in.read(in_buf.data(), static_cast<std::streamsize>(in_buf.size()));
        const auto got = static_cast<std::size_t>(in.gcount());
        if (got == 0) break;
        any_input = true;
        ZSTD_inBuffer input{in_buf.data(), got, 0};
        while (input.pos < input.size) {
            ZSTD_outBuffer output{out_buf.data(), out_buf.size(), 0};
            const std::size_t before = input.pos;
            last_ret = ZSTD_decompressStream(dctx.get(), &output, &input);
            if (ZSTD_isError(last_ret)) throw FrameError(path.string(), frame_start, ZSTD_getErrorName(last_ret));
            if (output.pos > 0) consume(std::string_view(out_buf.data(), output.pos));
            if (last_ret == 0) frame_start = consumed_total + input.pos;
            if (input.pos == before && output.pos == 0) break;
        }
        consumed_total += got;
    }
    // Flush anything still buffered inside the decoder.
    for (;;) {
        ZSTD_inBuffer input{nullptr, 0, 0};
        ZSTD_outBuffer output{out_buf.data(), out_buf.size(), 0};
        if (last_ret == 0) break;
        last_ret = ZSTD_decompressStream(dctx.get(), &output, &input);
        if (ZSTD_isError(last_ret)) throw FrameError(path.string(), frame_start, ZSTD_getErrorName(last_ret));
        if (output.pos > 0) consume(std::string_view(out_buf.data(), output.pos));
        if (output.pos == 0) break;
    }
    if (any_input && last_ret != 0) throw FrameError(path.string(), frame_start, "truncated frame");
}

}  // namespace

void for_each_line(const fs::path& path,
                   const std::function<void(std::string_view, std::size_t)>& sink) {
    std::size_t line_no = 0;
    if (has_zst_suffix(path)) {
        std::string pending;
        decompress_file(path, [&](std::string_view chunk) {
            std::size_t start = 0;
            for (;;) {
                const auto nl = chunk.find('\n', start);
                if (nl == std::string_view::npos) {
                    pending.append(chunk.substr(start));
                    break;
                }
                pending.append(chunk.substr(start, nl - start));
                sink(pending, ++line_no);
                pending.clear();
                start = nl + 1;
            }
        });
        if (!pending.empty()) sink(pending, ++line_no);
        return;
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    while (std::getline(in, line)) sink(line, ++line_no);
}

std::vector<Document> read_documents(const fs::path& path) {
    std::vector<Document> docs;
    for_each_line(path, [&](std::string_view line, std::size_t line_no) {
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) return;
        try {
            docs.push_back(parse_document_line(line));
        } catch (const ParseError& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what(), e.byte_offset());
        } catch (const SchemaError& e) {
            throw SchemaError(e.field(), path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    });
    return docs;
}

std::vector<Document> read_documents(const std::vector<fs::path>& paths) {
    std::vector<Document> docs;
    for (const auto& path : paths) {
        auto part = read_documents(path);
        docs.insert(docs.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    return docs;
}

void write_documents(const fs::path& path, const std::vector<Document>& documents, int zstd_level) {
    if (has_zst_suffix(path)) {
        ZstdWriter writer(path, zstd_level);
        for (const auto& doc : documents) {
            writer.write(serialize_document(doc));
            writer.write("\n");
        }
        writer.finish();
        return;
    }
    AtomicFile file(path);
    for (const auto& doc : documents) file.stream() << serialize_document(doc) << '\n';
    file.commit();
}

void write_json_lines(const fs::path& path, const std::vector<Json>& records) {
    AtomicFile file(path);
    for (const auto& record : records) file.stream() << record.dump() << '\n';
    file.commit();
}

Json read_json_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    try {
        return Json::parse(buffer.str());
    } catch (const Json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what(), e.byte > 0 ? e.byte - 1 : 0);
    }
}

}  // namespace refinery
