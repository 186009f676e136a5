#include "ehr/patient_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>
#include <list>
#include <mutex>

#include "ehr/errors.hpp"

namespace ehr {

namespace fs = std::filesystem;

namespace {

class Fd {
   public:
    explicit Fd(const fs::path& p) : fd_(::open(p.c_str(), O_RDONLY | O_CLOEXEC)) {
        if (fd_ < 0) {
            throw IoError("cannot open partition " + p.string());
        }
    }
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;
    ~Fd() { ::close(fd_); }
    int get() const { return fd_; }

   private:
    int fd_;
};

struct OpenPartition {
    Fd fd;
    evp::Footer footer;
    explicit OpenPartition(const fs::path& p) : fd(p) {}
};

// Length of the record starting at p, or 0 if more than `avail` bytes are needed.
size_t record_length(const char* p, size_t avail) {
    size_t pos = 0;
    auto need = [&](size_t n) { return pos + n <= avail; };
    auto u16 = [&](size_t at) {
        std::uint16_t v;
        std::memcpy(&v, p + at, 2);
        return static_cast<size_t>(v);
    };
    auto u32 = [&](size_t at) {
        std::uint32_t v;
        std::memcpy(&v, p + at, 4);
        return static_cast<size_t>(v);
    };
    if (!need(4)) return 0;
    pos += 4 + u32(pos);
    if (!need(1)) return 0;
    const bool ts = p[pos] & 1;
    pos += 1 + (ts ? 8 : 0);
    if (!need(2)) return 0;
    pos += 2 + u16(pos);
    pos += 8;
    if (!need(2)) return 0;
    const size_t n = u16(pos);
    pos += 2;
    for (size_t i = 0; i < n; ++i) {
        if (!need(2)) return 0;
        pos += 2 + u16(pos);
        if (!need(4)) return 0;
        pos += 4 + u32(pos);
    }
    return need(0) ? pos : 0;
}

}  // namespace

struct Store::State {
    fs::path root;
    CacheManifest manifest;
    StoreOptions opts;
    std::vector<std::uint64_t> first_patient;  // cumulative patient index per partition
    std::atomic<std::uint64_t> manifest_bytes{0};
    std::atomic<std::uint64_t> partition_bytes{0};

    mutable std::mutex mu;
    std::list<std::pair<size_t, std::shared_ptr<OpenPartition>>> lru;  // front = most recent

    std::shared_ptr<OpenPartition> acquire(size_t index) {
        std::lock_guard lock(mu);
        for (auto it = lru.begin(); it != lru.end(); ++it) {
            if (it->first == index) {
                lru.splice(lru.begin(), lru, it);
                return it->second;
            }
        }
        const fs::path p = root / manifest.partitions[index].path;
        auto part = std::make_shared<OpenPartition>(p);
        std::uint64_t read = 0;
        part->footer = evp::read_footer(p, &read);
        partition_bytes += read;
        const auto& expect = manifest.partitions[index];
        if (part->footer.min_patient_id != expect.min_patient_id ||
            part->footer.max_patient_id != expect.max_patient_id ||
            part->footer.event_count != expect.event_count) {
            throw ManifestError("partition " + p.string() + " footer disagrees with manifest");
        }
        lru.emplace_front(index, part);
        while (lru.size() > opts.max_open_partitions) {
            lru.pop_back();
        }
        return part;
    }
};

Store Store::open(const fs::path& root, StoreOptions opts) {
    const fs::path mpath = root / kManifestFile;
    if (!fs::is_regular_file(mpath)) {
        throw ManifestError("missing manifest " + mpath.string());
    }
    std::string text;
    try {
        text = read_file(mpath);
    } catch (const IoError& e) {
        throw ManifestError(e.what());
    }
    auto s = std::make_shared<State>();
    s->root = root;
    s->opts = opts;
    if (s->opts.max_open_partitions == 0) {
        s->opts.max_open_partitions = 1;
    }
    s->manifest = manifest_from_json(text);
    s->manifest_bytes = text.size();
    std::uint64_t acc = 0;
    for (const auto& p : s->manifest.partitions) {
        s->first_patient.push_back(acc);
        acc += p.patient_count;
    }
    return Store(std::move(s));
}

const CacheManifest& Store::manifest() const { return state_->manifest; }
const fs::path& Store::root() const { return state_->root; }
std::uint64_t Store::manifest_bytes_read() const { return state_->manifest_bytes.load(); }
std::uint64_t Store::partition_bytes_read() const { return state_->partition_bytes.load(); }

size_t Store::open_partition_handles() const {
    std::lock_guard lock(state_->mu);
    return state_->lru.size();
}

std::optional<size_t> Store::find_partition(std::string_view patient_id) const {
    const auto& parts = state_->manifest.partitions;
    // first partition whose max >= patient_id
    auto it = std::partition_point(parts.begin(), parts.end(), [&](const EventPartition& p) {
        return std::string_view(p.max_patient_id) < patient_id;
    });
    if (it == parts.end() || patient_id < std::string_view(it->min_patient_id)) {
        return std::nullopt;
    }
    return static_cast<size_t>(it - parts.begin());
}

std::vector<Event> Store::get_events(std::string_view patient_id, const EventFilter* filter) const {
    if (filter) {
        validate_filter(*filter);
    }
    std::vector<Event> out;
    const auto index = find_partition(patient_id);
    if (!index) {
        return out;
    }
    auto part = state_->acquire(*index);
    const int fd = part->fd.get();
    const std::uint64_t end = part->footer.footer_offset;
    std::uint64_t file_pos = evp::kHeaderSize;

    constexpr size_t kChunk = 1 << 20;
    std::string buf;
    size_t pos = 0;
    bool found = false;
    while (true) {
        size_t len = record_length(buf.data() + pos, buf.size() - pos);
        if (len == 0) {
            if (file_pos >= end) {
                if (pos != buf.size()) {
                    throw IoError("truncated record in " + state_->manifest.partitions[*index].path);
                }
                break;
            }
            buf.erase(0, pos);
            pos = 0;
            const size_t want = static_cast<size_t>(std::min<std::uint64_t>(kChunk, end - file_pos));
            const size_t old = buf.size();
            buf.resize(old + want);
            const ssize_t got = ::pread(fd, buf.data() + old, want, static_cast<off_t>(file_pos));
            if (got != static_cast<ssize_t>(want)) {
                throw IoError("read failed on " + state_->manifest.partitions[*index].path);
            }
            file_pos += want;
            state_->partition_bytes += want;
            continue;
        }
        std::uint32_t pid_len;
        std::memcpy(&pid_len, buf.data() + pos, 4);
        const std::string_view pid(buf.data() + pos + 4, pid_len);
        if (pid == patient_id) {
            found = true;
            ByteReader r(buf.data() + pos, len);
            Event e = evp::decode_event(r);
            if (!filter || filter->matches(e)) {
                out.push_back(std::move(e));
            }
        } else if (found || patient_id < pid) {
            break;  // sorted: the patient's block is over
        }
        pos += len;
    }
    return out;
}

std::uint64_t Store::batch_count(size_t batch_size) const {
    if (batch_size == 0) {
        throw ValidationError("batch_size must be >= 1");
    }
    const std::uint64_t n = state_->manifest.total_patients;
    return (n + batch_size - 1) / batch_size;
}

PatientBatchReader Store::batches(size_t batch_size, std::uint64_t first_batch,
                                  std::uint64_t batch_limit) const {
    return PatientBatchReader(state_, batch_size, first_batch, batch_limit);
}

PatientBatchReader::PatientBatchReader(std::shared_ptr<Store::State> state, size_t batch_size,
                                       std::uint64_t first_batch, std::uint64_t batch_limit)
    : state_(std::move(state)), batch_size_(batch_size), next_batch_index_(first_batch) {
    if (batch_size == 0) {
        throw ValidationError("batch_size must be >= 1");
    }
    const std::uint64_t total = state_->manifest.total_patients;
    const std::uint64_t first_patient =
        first_batch > total / batch_size ? total : std::min(total, first_batch * batch_size);
    const std::uint64_t max_patients =
        batch_limit > total ? total : std::min(total, batch_limit * batch_size);
    patients_left_ = std::min(total - first_patient, max_patients);
    if (patients_left_ == 0) {
        return;
    }
    // locate the partition holding first_patient, then skip within it
    const auto& starts = state_->first_patient;
    partition_ = static_cast<size_t>(
        std::upper_bound(starts.begin(), starts.end(), first_patient) - starts.begin() - 1);
    std::uint64_t skip = first_patient - starts[partition_];
    reader_.emplace(state_->root / state_->manifest.partitions[partition_].path);
    Event e;
    std::string current;
    bool any = false;
    while (read_event(e)) {
        if (!any || e.patient_id != current) {
            if (skip == 0) {
                lookahead_ = std::move(e);
                break;
            }
            --skip;
            current = e.patient_id;
            any = true;
        }
    }
}

bool PatientBatchReader::read_event(Event& e) {
    while (reader_) {
        if (reader_->next(e)) {
            return true;
        }
        state_->partition_bytes += reader_->bytes_read();
        reader_.reset();
        if (++partition_ < state_->manifest.partitions.size()) {
            reader_.emplace(state_->root / state_->manifest.partitions[partition_].path);
        }
    }
    return false;
}

std::optional<PatientBatch> PatientBatchReader::next() {
    if (patients_left_ == 0 || !lookahead_) {
        return std::nullopt;
    }
    PatientBatch batch;
    batch.batch_index = next_batch_index_++;
    std::uint64_t events = 0;
    while (patients_left_ > 0 && batch.records.size() < batch_size_ && lookahead_) {
        PatientRecord rec;
        rec.patient_id = lookahead_->patient_id;
        rec.events.push_back(std::move(*lookahead_));
        lookahead_.reset();
        Event e;
        while (read_event(e)) {
            if (e.patient_id != rec.patient_id) {
                lookahead_ = std::move(e);
                break;
            }
            rec.events.push_back(std::move(e));
        }
        events += rec.events.size();
        batch.records.push_back(std::move(rec));
        --patients_left_;
    }
    peak_events_ = std::max(peak_events_, events);
    return batch;
}

}  // namespace ehr
