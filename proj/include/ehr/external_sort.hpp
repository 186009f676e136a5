#pragma once

// Out-of-core sort: bounded in-memory run generation with spill files,
// followed by a (possibly multi-pass) k-way merge. Header-only so any record
// type with a codec can use it.
//
// Codec requirements:
//   static void encode(const T&, std::string& out);   // appends one record
//   static bool decode(FileReader&, T& out);          // false on clean EOF
//   static size_t mem_size(const T&);                 // in-memory footprint

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "ehr/errors.hpp"
#include "ehr/io_util.hpp"

namespace ehr {

struct SortOptions {
    // Memory for one run-generation buffer.
    size_t run_budget_bytes = 32u << 20;
    // Memory for merge read buffers plus head records.
    size_t merge_budget_bytes = 16u << 20;
    size_t min_read_buffer = 64u << 10;
    std::filesystem::path spill_dir;
};

struct SortStats {
    std::atomic<std::uint64_t> runs_written{0};
    std::atomic<std::uint64_t> records_in{0};
    std::atomic<std::uint64_t> merge_passes{0};
};

// Spilled runs shared by every producer of one sort. Files are deleted when
// the set is destroyed.
class RunSet {
   public:
    explicit RunSet(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
    }
    RunSet(const RunSet&) = delete;
    RunSet& operator=(const RunSet&) = delete;
    ~RunSet() {
        std::error_code ec;
        for (const auto& p : all_paths_) {
            std::filesystem::remove(p, ec);
        }
    }

    std::filesystem::path new_path() {
        std::lock_guard lock(mu_);
        auto p = dir_ / ("run-" + std::to_string(next_id_++) + ".spill");
        all_paths_.push_back(p);
        return p;
    }
    // ordinal orders runs for tie-breaking; producers pass a value that
    // reflects input order.
    void add(std::uint64_t ordinal, std::filesystem::path p) {
        std::lock_guard lock(mu_);
        runs_.emplace_back(ordinal, std::move(p));
    }
    std::vector<std::filesystem::path> take_sorted() {
        std::lock_guard lock(mu_);
        std::sort(runs_.begin(), runs_.end());
        std::vector<std::filesystem::path> out;
        for (auto& [o, p] : runs_) {
            out.push_back(std::move(p));
        }
        runs_.clear();
        return out;
    }
    void discard(const std::filesystem::path& p) {
        std::error_code ec;
        std::filesystem::remove(p, ec);
    }

   private:
    std::filesystem::path dir_;
    std::mutex mu_;
    std::uint64_t next_id_ = 0;
    std::vector<std::pair<std::uint64_t, std::filesystem::path>> runs_;
    std::vector<std::filesystem::path> all_paths_;
};

// Single-threaded producer of sorted runs; one per worker.
template <typename T, typename Codec, typename Less>
class RunBuilder {
   public:
    RunBuilder(RunSet& runs, size_t budget_bytes, MemoryTracker* tracker, SortStats* stats,
               std::uint64_t ordinal_base = 0, Less less = Less{})
        : runs_(runs),
          budget_(budget_bytes),
          held_(tracker, 0),
          stats_(stats),
          ordinal_(ordinal_base),
          less_(less) {}

    void add(T value) {
        const size_t bytes = Codec::mem_size(value) + sizeof(T);
        if (bytes > budget_) {
            throw BudgetError("single record of " + std::to_string(bytes) +
                              " bytes exceeds the sort buffer budget of " +
                              std::to_string(budget_));
        }
        if (buffer_bytes_ + bytes > budget_) {
            spill();
        }
        buffer_.push_back(std::move(value));
        buffer_bytes_ += bytes;
        held_.add(static_cast<std::int64_t>(bytes));
        if (stats_) {
            stats_->records_in.fetch_add(1, std::memory_order_relaxed);
        }
    }

    void finish() {
        if (!buffer_.empty()) {
            spill();
        }
    }

   private:
    void spill() {
        std::stable_sort(buffer_.begin(), buffer_.end(), less_);
        auto path = runs_.new_path();
        FileWriter w(path);
        std::string rec;
        for (const T& v : buffer_) {
            rec.clear();
            Codec::encode(v, rec);
            w.write(rec);
        }
        w.close();
        runs_.add(ordinal_++, std::move(path));
        if (stats_) {
            stats_->runs_written.fetch_add(1, std::memory_order_relaxed);
        }
        buffer_.clear();
        buffer_.shrink_to_fit();
        buffer_bytes_ = 0;
        held_.reset();
    }

    RunSet& runs_;
    size_t budget_;
    std::vector<T> buffer_;
    size_t buffer_bytes_ = 0;
    TrackedBytes held_;
    SortStats* stats_;
    std::uint64_t ordinal_;
    Less less_;
};

// k-way merge over spilled runs; yields records in Less order, ties broken
// by run order (so a single producer's sort is stable).
template <typename T, typename Codec, typename Less>
class MergedStream {
   public:
    MergedStream(std::shared_ptr<RunSet> runs, const SortOptions& opts, MemoryTracker* tracker,
                 SortStats* stats, Less less = Less{})
        : runs_(std::move(runs)), opts_(opts), tracker_(tracker), less_(less) {
        std::vector<std::filesystem::path> paths = runs_->take_sorted();
        const size_t fan_in = std::max<size_t>(2, opts_.merge_budget_bytes / opts_.min_read_buffer);
        // intermediate passes until one merge suffices
        while (paths.size() > fan_in) {
            if (stats) {
                stats->merge_passes.fetch_add(1, std::memory_order_relaxed);
            }
            std::vector<std::filesystem::path> next;
            for (size_t i = 0; i < paths.size(); i += fan_in) {
                std::vector<std::filesystem::path> group(
                    paths.begin() + static_cast<std::ptrdiff_t>(i),
                    paths.begin() + static_cast<std::ptrdiff_t>(std::min(paths.size(), i + fan_in)));
                if (group.size() == 1) {
                    next.push_back(group[0]);
                    continue;
                }
                auto out = runs_->new_path();
                {
                    Merger m(group, opts_, tracker_, less_);
                    FileWriter w(out);
                    std::string rec;
                    T v;
                    while (m.next(v)) {
                        rec.clear();
                        Codec::encode(v, rec);
                        w.write(rec);
                    }
                    w.close();
                }
                for (const auto& p : group) {
                    runs_->discard(p);
                }
                next.push_back(out);
            }
            paths = std::move(next);
        }
        if (stats) {
            stats->merge_passes.fetch_add(1, std::memory_order_relaxed);
        }
        merger_.emplace(paths, opts_, tracker_, less_);
    }

    bool next(T& out) { return merger_->next(out); }

   private:
    class Merger {
       public:
        Merger(const std::vector<std::filesystem::path>& paths, const SortOptions& opts,
               MemoryTracker* tracker, Less less)
            : heap_(HeapLess{less}), held_(tracker, 0), tracker_(tracker) {
            if (paths.empty()) {
                return;
            }
            const size_t per_run =
                std::clamp<size_t>(opts.merge_budget_bytes / paths.size() / 2, 4096, 1u << 20);
            for (size_t i = 0; i < paths.size(); ++i) {
                readers_.push_back(std::make_unique<FileReader>(paths[i], per_run));
                held_.add(static_cast<std::int64_t>(per_run));
                push_from(i);
            }
        }

        bool next(T& out) {
            if (heap_.empty()) {
                return false;
            }
            Head top = std::move(const_cast<Head&>(heap_.top()));
            heap_.pop();
            if (tracker_) {
                tracker_->release(static_cast<std::int64_t>(top.bytes));
            }
            out = std::move(top.value);
            push_from(top.run);
            return true;
        }

       private:
        struct Head {
            T value;
            size_t run;
            size_t bytes;
        };
        struct HeapLess {
            Less less;
            // priority_queue is a max-heap: "a after b"
            bool operator()(const Head& a, const Head& b) const {
                if (less(b.value, a.value)) {
                    return true;
                }
                if (less(a.value, b.value)) {
                    return false;
                }
                return a.run > b.run;
            }
        };

        void push_from(size_t run) {
            T v;
            if (Codec::decode(*readers_[run], v)) {
                const size_t bytes = Codec::mem_size(v) + sizeof(Head);
                if (tracker_) {
                    tracker_->charge(static_cast<std::int64_t>(bytes));
                }
                heap_.push(Head{std::move(v), run, bytes});
            } else {
                readers_[run].reset();
            }
        }

        std::vector<std::unique_ptr<FileReader>> readers_;
        std::priority_queue<Head, std::vector<Head>, HeapLess> heap_;
        TrackedBytes held_;
        MemoryTracker* tracker_;
    };

    std::shared_ptr<RunSet> runs_;
    SortOptions opts_;
    MemoryTracker* tracker_;
    Less less_;
    std::optional<Merger> merger_;
};

// Sorts everything `source` yields. `source` is a callable filling its
// argument and returning false when exhausted.
template <typename T, typename Codec, typename Less, typename Source>
MergedStream<T, Codec, Less> external_sort(Source&& source, const SortOptions& opts,
                                           MemoryTracker* tracker = nullptr,
                                           SortStats* stats = nullptr, Less less = Less{}) {
    auto runs = std::make_shared<RunSet>(opts.spill_dir);
    {
        RunBuilder<T, Codec, Less> builder(*runs, opts.run_budget_bytes, tracker, stats, 0, less);
        T v;
        while (source(v)) {
            builder.add(std::move(v));
            v = T{};
        }
        builder.finish();
    }
    return MergedStream<T, Codec, Less>(std::move(runs), opts, tracker, stats, less);
}

}  // namespace ehr
