#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "coconut/error.hpp"
#include "coconut/io.hpp"
#include "coconut/series.hpp"

namespace coconut {

// Raw dataset file: headerless, N consecutive series, each series_len
// little-endian 32-bit floats. N is inferred from the file size.

inline std::uint64_t raw_series_count(const std::filesystem::path& path, std::size_t series_len) {
    std::error_code ec;
    auto size = std::filesystem::file_size(path, ec);
    if (ec) throw IoError("cannot stat '" + path.string() + "': " + ec.message());
    std::uint64_t bytes_per_series = 4ull * series_len;
    if (size % bytes_per_series != 0)
        throw FormatError("raw file '" + path.string() + "' size " + std::to_string(size) +
                          " is not divisible by 4*series_len = " +
                          std::to_string(bytes_per_series));
    return size / bytes_per_series;
}

/// Sequential/positional reader over a raw dataset file.
class RawDataset {
public:
    RawDataset(const std::filesystem::path& path, std::size_t series_len,
               IoCounters* counters = nullptr)
        : series_len_(series_len),
          count_(raw_series_count(path, series_len)),
          file_(path, "rb", counters) {}

    std::uint64_t count() const { return count_; }
    std::size_t series_len() const { return series_len_; }
    std::uint64_t series_bytes() const { return 4ull * series_len_; }
    std::uint64_t file_bytes() const { return count_ * series_bytes(); }

    /// Raw little-endian float bytes of series i (the materialized payload form).
    void read_payload(std::uint64_t index, std::uint8_t* out) {
        check_index(index);
        file_.read_at(index * series_bytes(), out, series_bytes());
    }

    DataSeries read_series(std::uint64_t index) {
        std::vector<std::uint8_t> buf(series_bytes());
        read_payload(index, buf.data());
        return decode(buf.data());
    }

    /// Series starting at an absolute byte offset (as stored in index records).
    DataSeries read_series_at_offset(std::uint64_t byte_offset) {
        if (byte_offset % series_bytes() != 0 || byte_offset >= file_bytes())
            throw IntegrityError("record offset " + std::to_string(byte_offset) +
                                 " is outside raw file '" + file_.path() + "'");
        return read_series(byte_offset / series_bytes());
    }

    DataSeries decode(const std::uint8_t* payload) const {
        DataSeries s;
        s.values.resize(series_len_);
        for (std::size_t i = 0; i < series_len_; ++i)
            s.values[i] = static_cast<double>(load_f32le(payload + 4 * i));
        return s;
    }

private:
    void check_index(std::uint64_t index) const {
        if (index >= count_)
            throw IntegrityError("series index " + std::to_string(index) +
                                 " out of range (count " + std::to_string(count_) + ")");
    }

    std::size_t series_len_;
    std::uint64_t count_;
    CountingFile file_;
};

/// Append-only raw dataset writer (float32 little-endian).
class RawDatasetWriter {
public:
    RawDatasetWriter(const std::filesystem::path& path, std::size_t series_len,
                     IoCounters* counters = nullptr)
        : series_len_(series_len), file_(path, "wb", counters) {}

    void append(const DataSeries& s) {
        if (s.size() != series_len_)
            throw ConfigError("series length " + std::to_string(s.size()) +
                              " does not match configured " + std::to_string(series_len_));
        std::vector<std::uint8_t> buf(4 * series_len_);
        for (std::size_t i = 0; i < series_len_; ++i)
            store_f32le(buf.data() + 4 * i, static_cast<float>(s.values[i]));
        file_.write(buf.data(), buf.size());
    }

    void close() { file_.close(); }

private:
    std::size_t series_len_;
    CountingFile file_;
};

} // namespace coconut
