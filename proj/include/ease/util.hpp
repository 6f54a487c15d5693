#pragma once

// Small shared utilities: seeded PRNG + shuffle (kept bit-stable so golden
// files are portable), string hashing for cache keys and sub-seed derivation,
// token-count heuristics, and a bounded parallel loop.

#include <atomic>
#include <cctype>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace ease {

// splitmix64; state advances by the golden-gamma constant per draw.
struct SplitMix64 {
    std::uint64_t state = 0;

    std::uint64_t next() {
        state += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
};

// Fisher-Yates driven by SplitMix64 with modulo draws. The exact draw
// sequence is part of the golden-file contract; do not change it.
template <typename T>
void seeded_shuffle(std::vector<T>& items, std::uint64_t seed) {
    SplitMix64 rng{seed};
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.next() % i);
        std::swap(items[i - 1], items[j]);
    }
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xCBF29CE484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

// Named sub-seed derivation: every stream of randomness in a run flows from
// the run seed through one of these, so concurrency cannot reorder results.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view ns, std::string_view item = {}) {
    std::uint64_t h = fnv1a64(ns);
    if (!item.empty()) h = fnv1a64(item, h ^ 0x9E3779B97F4A7C15ULL);
    SplitMix64 mix{root ^ h};
    return mix.next();
}

inline std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

// First run of alphanumeric characters, lowercased. Empty if none.
inline std::string first_alnum_token(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size() && !std::isalnum(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && std::isalnum(static_cast<unsigned char>(s[j]))) ++j;
    return ascii_lower(s.substr(i, j - i));
}

// Crude ~4 chars/token heuristic used when the backend has no tokenizer.
inline std::size_t approx_token_count(std::string_view text) {
    return (text.size() + 3) / 4;
}

using TokenCounter = std::function<std::size_t(std::string_view)>;

// Runs fn(0..n-1) on up to `workers` threads. Results must be written to
// per-index slots by the caller; the first exception (lowest index) is
// rethrown after all workers join.
inline void parallel_for_indexed(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    if (workers <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::size_t err_index = n;
    std::exception_ptr err;
    auto body = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (i < err_index) {
                    err_index = i;
                    err = std::current_exception();
                }
            }
        }
    };
    std::size_t thread_count = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    std::vector<std::thread> pool;
    pool.reserve(thread_count);
    for (std::size_t t = 0; t < thread_count; ++t) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

// Write-to-temp then rename, so readers never observe partial content and
// concurrent writers of identical content are last-write-wins.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    std::filesystem::create_directories(path.parent_path());
    static std::atomic<std::uint64_t> counter{0};
    std::random_device rd;
    auto tmp = path;
    tmp += ".tmp." + std::to_string(rd()) + "." + std::to_string(counter.fetch_add(1));
    {
        std::ofstream out(tmp, std::ios::binary);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw std::filesystem::filesystem_error("write failed", tmp, std::make_error_code(std::errc::io_error));
        }
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::filesystem::filesystem_error("cannot open", path, std::make_error_code(std::errc::no_such_file_or_directory));
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return content;
}

}  // namespace ease
