#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>

#include "coconut/error.hpp"

namespace coconut {

// ---------------------------------------------------------------------------
// Little-endian codecs. All on-disk integers are little-endian; floats are
// IEEE-754 bit patterns stored through their unsigned carriers.
// ---------------------------------------------------------------------------

inline void store_u16le(std::uint8_t* p, std::uint16_t v) {
    p[0] = static_cast<std::uint8_t>(v);
    p[1] = static_cast<std::uint8_t>(v >> 8);
}

inline void store_u32le(std::uint8_t* p, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

inline void store_u64le(std::uint8_t* p, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

inline std::uint16_t load_u16le(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (std::uint16_t(p[1]) << 8));
}

inline std::uint32_t load_u32le(const std::uint8_t* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(p[i]) << (8 * i);
    return v;
}

inline std::uint64_t load_u64le(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[i]) << (8 * i);
    return v;
}

inline void store_f32le(std::uint8_t* p, float v) {
    store_u32le(p, std::bit_cast<std::uint32_t>(v));
}

inline float load_f32le(const std::uint8_t* p) {
    return std::bit_cast<float>(load_u32le(p));
}

inline void store_f64le(std::uint8_t* p, double v) {
    store_u64le(p, std::bit_cast<std::uint64_t>(v));
}

inline double load_f64le(const std::uint8_t* p) {
    return std::bit_cast<double>(load_u64le(p));
}

// ---------------------------------------------------------------------------
// I/O accounting. The construction and query claims of this engine are
// I/O-cost claims, so byte and seek counters are first-class outputs.
// ---------------------------------------------------------------------------

struct IoCounters {
    std::uint64_t bytes_read = 0;
    std::uint64_t bytes_written = 0;
    std::uint64_t read_calls = 0;
    std::uint64_t write_calls = 0;
    std::uint64_t seeks = 0;          // reads/writes not at the current position
    std::uint64_t backward_seeks = 0; // subset of seeks that move backwards

    IoCounters& operator+=(const IoCounters& o) {
        bytes_read += o.bytes_read;
        bytes_written += o.bytes_written;
        read_calls += o.read_calls;
        write_calls += o.write_calls;
        seeks += o.seeks;
        backward_seeks += o.backward_seeks;
        return *this;
    }
};

/// RAII stdio file with positional reads/writes and byte/seek accounting.
/// A null counters pointer disables accounting.
class CountingFile {
public:
    CountingFile() = default;

    CountingFile(const std::filesystem::path& path, const char* mode, IoCounters* counters)
        : counters_(counters), path_(path.string()) {
        file_ = std::fopen(path_.c_str(), mode);
        if (!file_) throw IoError("cannot open '" + path_ + "'");
    }

    CountingFile(CountingFile&& o) noexcept { *this = std::move(o); }
    CountingFile& operator=(CountingFile&& o) noexcept {
        close();
        file_ = o.file_;
        counters_ = o.counters_;
        pos_ = o.pos_;
        path_ = std::move(o.path_);
        o.file_ = nullptr;
        return *this;
    }
    CountingFile(const CountingFile&) = delete;
    CountingFile& operator=(const CountingFile&) = delete;
    ~CountingFile() { close(); }

    bool is_open() const { return file_ != nullptr; }
    const std::string& path() const { return path_; }

    void read_at(std::uint64_t offset, void* out, std::size_t len) {
        seek(offset);
        read(out, len);
    }

    void read(void* out, std::size_t len) {
        if (std::fread(out, 1, len, file_) != len)
            throw IoError("short read from '" + path_ + "'");
        pos_ += len;
        if (counters_) {
            counters_->bytes_read += len;
            counters_->read_calls += 1;
        }
    }

    /// Read up to len bytes; returns the number actually read (0 at EOF).
    std::size_t read_some(void* out, std::size_t len) {
        std::size_t got = std::fread(out, 1, len, file_);
        if (got != len && std::ferror(file_))
            throw IoError("read error on '" + path_ + "'");
        pos_ += got;
        if (counters_ && got) {
            counters_->bytes_read += got;
            counters_->read_calls += 1;
        }
        return got;
    }

    void write_at(std::uint64_t offset, const void* data, std::size_t len) {
        seek(offset);
        write(data, len);
    }

    void write(const void* data, std::size_t len) {
        if (std::fwrite(data, 1, len, file_) != len)
            throw IoError("short write to '" + path_ + "'");
        pos_ += len;
        if (counters_) {
            counters_->bytes_written += len;
            counters_->write_calls += 1;
        }
    }

    void seek(std::uint64_t offset) {
        if (offset == pos_) return;
        if (std::fseek(file_, static_cast<long>(offset), SEEK_SET) != 0)
            throw IoError("seek failed on '" + path_ + "'");
        if (counters_) {
            counters_->seeks += 1;
            if (offset < pos_) counters_->backward_seeks += 1;
        }
        pos_ = offset;
    }

    std::uint64_t position() const { return pos_; }

    void flush() {
        if (file_ && std::fflush(file_) != 0) throw IoError("flush failed on '" + path_ + "'");
    }

    void close() {
        if (file_) {
            std::fclose(file_);
            file_ = nullptr;
        }
    }

private:
    std::FILE* file_ = nullptr;
    IoCounters* counters_ = nullptr;
    std::uint64_t pos_ = 0;
    std::string path_;
};

// ---------------------------------------------------------------------------
// FNV-1a 64-bit hash, used to detect a swapped raw file behind a
// non-materialized index.
// ---------------------------------------------------------------------------

struct Fnv1a64 {
    std::uint64_t state = 0xcbf29ce484222325ull;

    void update(const void* data, std::size_t len) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            state ^= p[i];
            state *= 0x100000001b3ull;
        }
    }

    std::uint64_t digest() const { return state; }
};

inline std::uint64_t hash_file(const std::filesystem::path& path) {
    CountingFile f(path, "rb", nullptr);
    Fnv1a64 h;
    std::uint8_t buf[1 << 16];
    while (std::size_t got = f.read_some(buf, sizeof buf)) h.update(buf, got);
    return h.digest();
}

/// Temp directory for sort runs: $COCONUT_TMPDIR wins, else the system default.
inline std::filesystem::path default_temp_dir() {
    if (const char* env = std::getenv("COCONUT_TMPDIR")) return std::filesystem::path(env);
    return std::filesystem::temp_directory_path();
}

} // namespace coconut
