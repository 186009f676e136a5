#pragma once

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace ehr {

std::string sha256_hex(std::string_view data);
std::string sha256_file_hex(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
// Writes via a temporary sibling and rename, so readers never see a torn file.
void write_file_atomic(const std::filesystem::path& path, std::string_view data);

// Tracks bytes held by engine buffers and their high-water mark. Shared by
// all workers of a run.
class MemoryTracker {
   public:
    void charge(std::int64_t bytes) {
        const std::int64_t now = current_.fetch_add(bytes, std::memory_order_relaxed) + bytes;
        std::int64_t hw = high_water_.load(std::memory_order_relaxed);
        while (now > hw && !high_water_.compare_exchange_weak(hw, now, std::memory_order_relaxed)) {
        }
    }
    void release(std::int64_t bytes) { current_.fetch_sub(bytes, std::memory_order_relaxed); }
    std::int64_t current() const { return current_.load(std::memory_order_relaxed); }
    std::int64_t high_water() const { return high_water_.load(std::memory_order_relaxed); }

   private:
    std::atomic<std::int64_t> current_{0};
    std::atomic<std::int64_t> high_water_{0};
};

// RAII charge against a tracker (tracker may be null).
class TrackedBytes {
   public:
    TrackedBytes() = default;
    TrackedBytes(MemoryTracker* t, std::int64_t bytes) : tracker_(t) { add(bytes); }
    TrackedBytes(const TrackedBytes&) = delete;
    TrackedBytes& operator=(const TrackedBytes&) = delete;
    TrackedBytes(TrackedBytes&& o) noexcept : tracker_(o.tracker_), bytes_(o.bytes_) {
        o.bytes_ = 0;
    }
    TrackedBytes& operator=(TrackedBytes&& o) noexcept {
        if (this != &o) {
            reset();
            tracker_ = o.tracker_;
            bytes_ = o.bytes_;
            o.bytes_ = 0;
        }
        return *this;
    }
    ~TrackedBytes() { reset(); }

    void add(std::int64_t bytes) {
        if (tracker_) {
            tracker_->charge(bytes);
        }
        bytes_ += bytes;
    }
    void reset() {
        if (tracker_ && bytes_) {
            tracker_->release(bytes_);
        }
        bytes_ = 0;
    }
    std::int64_t bytes() const { return bytes_; }

   private:
    MemoryTracker* tracker_ = nullptr;
    std::int64_t bytes_ = 0;
};

// Little-endian append helpers over a byte string.
class ByteWriter {
   public:
    explicit ByteWriter(std::string& out) : out_(out) {}

    template <typename T>
    void put(T v) {
        static_assert(std::is_integral_v<T> || std::is_floating_point_v<T>);
        char buf[sizeof(T)];
        std::memcpy(buf, &v, sizeof(T));  // host is little-endian (checked at build)
        out_.append(buf, sizeof(T));
    }
    void bytes(std::string_view s) { out_.append(s); }

   private:
    std::string& out_;
};

class ByteReader {
   public:
    ByteReader(const char* data, size_t size) : data_(data), size_(size) {}
    explicit ByteReader(std::string_view s) : ByteReader(s.data(), s.size()) {}

    template <typename T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, data_ + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::string_view bytes(size_t n) {
        need(n);
        std::string_view s(data_ + pos_, n);
        pos_ += n;
        return s;
    }
    void skip(size_t n) {
        need(n);
        pos_ += n;
    }
    size_t pos() const { return pos_; }
    size_t remaining() const { return size_ - pos_; }
    bool done() const { return pos_ == size_; }

   private:
    void need(size_t n) const;

    const char* data_;
    size_t size_;
    size_t pos_ = 0;
};

// Buffered sequential writer over a FILE*; throws IoError on failure.
class FileWriter {
   public:
    FileWriter(const std::filesystem::path& path, size_t buffer_bytes = 1 << 20);
    FileWriter(const FileWriter&) = delete;
    FileWriter& operator=(const FileWriter&) = delete;
    ~FileWriter();

    void write(std::string_view data);
    std::uint64_t offset() const { return offset_; }
    void close();
    const std::filesystem::path& path() const { return path_; }

   private:
    std::filesystem::path path_;
    std::FILE* f_ = nullptr;
    std::vector<char> buffer_;
    std::uint64_t offset_ = 0;
};

// Buffered sequential reader with exact-length reads.
class FileReader {
   public:
    FileReader(const std::filesystem::path& path, size_t buffer_bytes = 1 << 16);
    FileReader(const FileReader&) = delete;
    FileReader& operator=(const FileReader&) = delete;
    ~FileReader();

    // Returns false on clean EOF before any byte; throws on truncated read.
    bool read_exact(char* dst, size_t n);
    // Fills `dst` with exactly n bytes or throws.
    void read_into(std::string& dst, size_t n);
    template <typename T>
    T get() {
        T v;
        if (!read_exact(reinterpret_cast<char*>(&v), sizeof(T))) {
            throw_eof();
        }
        return v;
    }
    std::uint64_t bytes_read() const { return bytes_read_; }
    void seek(std::uint64_t offset);

   private:
    [[noreturn]] void throw_eof() const;
    bool fill();

    std::filesystem::path path_;
    std::FILE* f_ = nullptr;
    std::vector<char> buffer_;
    size_t begin_ = 0;
    size_t end_ = 0;
    std::uint64_t bytes_read_ = 0;
};

}  // namespace ehr
