// Copyright (c) 2026 The HALO Project Authors
// SPDX-License-Identifier: Apache-2.0

#include "halo/ipc/content_store.hpp"

#include <fcntl.h>
#include <pthread.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cstdlib>
#include <cstring>

#include "halo/ipc/copy_counter.hpp"

namespace halo::ipc {

namespace {

constexpr uint32_t kRegionMagic = 0x48414C53u;  // "HALS"
constexpr uint32_t kMaxEntries = 8192;
constexpr uint64_t kAlign = 64;

// Handle layout: slot index in the low 20 bits, slot generation above.
// Generations start at 1, so a valid handle is never 0.
constexpr uint64_t kSlotBits = 20;
constexpr uint64_t kSlotMask = (1ull << kSlotBits) - 1;

uint64_t align_up(uint64_t n) { return (n + kAlign - 1) & ~(kAlign - 1); }

struct Entry {
  uint64_t offset = 0;
  uint64_t length = 0;
  uint32_t refcount = 0;  // 0 = slot free
  uint32_t generation = 0;
};

struct FreeBlock {
  uint64_t offset = 0;
  uint64_t length = 0;
};

}  // namespace

struct ContentStore::Region {
  uint32_t magic = 0;
  uint32_t max_entries = 0;
  uint64_t capacity = 0;
  uint64_t total_size = 0;
  uint64_t used_bytes = 0;
  uint64_t live_handles = 0;
  uint64_t data_offset = 0;
  pthread_mutex_t lock;
  uint32_t free_count = 0;
  uint32_t pad = 0;
  Entry entries[kMaxEntries];
  FreeBlock free_blocks[kMaxEntries + 1];
};

std::string store_directory() {
  if (const char* d = std::getenv("HALO_SHM_DIR")) return d;
  struct stat st{};
  if (::stat("/dev/shm", &st) == 0 && S_ISDIR(st.st_mode)) return "/dev/shm";
  return "/tmp";
}

static std::string region_path(const std::string& name) {
  return store_directory() + "/" + name;
}

Result<std::unique_ptr<ContentStore>> ContentStore::create(
    const std::string& name, uint64_t capacity) {
  using R = Result<std::unique_ptr<ContentStore>>;
  std::string path = region_path(name);
  int fd = ::open(path.c_str(), O_CREAT | O_EXCL | O_RDWR | O_CLOEXEC, 0600);
  if (fd < 0 && errno == EEXIST) {
    // Stale region from a crashed run; app ids are random 64-bit draws, so a
    // live collision is not a realistic concern.
    ::unlink(path.c_str());
    fd = ::open(path.c_str(), O_CREAT | O_EXCL | O_RDWR | O_CLOEXEC, 0600);
  }
  if (fd < 0) return R::failure(StatusCode::ErrNoResource);

  uint64_t total = align_up(sizeof(Region)) + capacity;
  if (::ftruncate(fd, static_cast<off_t>(total)) != 0) {
    ::close(fd);
    ::unlink(path.c_str());
    return R::failure(StatusCode::ErrNoResource);
  }
  void* map = ::mmap(nullptr, total, PROT_READ | PROT_WRITE, MAP_SHARED, fd, 0);
  if (map == MAP_FAILED) {
    ::close(fd);
    ::unlink(path.c_str());
    return R::failure(StatusCode::ErrNoResource);
  }

  auto* r = new (map) Region();
  r->magic = kRegionMagic;
  r->max_entries = kMaxEntries;
  r->capacity = capacity;
  r->total_size = total;
  r->data_offset = align_up(sizeof(Region));
  r->free_count = 1;
  r->free_blocks[0] = {0, capacity};

  pthread_mutexattr_t attr;
  pthread_mutexattr_init(&attr);
  pthread_mutexattr_setpshared(&attr, PTHREAD_PROCESS_SHARED);
  pthread_mutex_init(&r->lock, &attr);
  pthread_mutexattr_destroy(&attr);

  auto store = std::unique_ptr<ContentStore>(new ContentStore());
  store->region_ = r;
  store->data_ = static_cast<std::byte*>(map) + r->data_offset;
  store->mapped_size_ = total;
  store->fd_ = fd;
  store->owner_ = true;
  store->name_ = name;
  store->path_ = path;
  return R::success(std::move(store));
}

Result<std::unique_ptr<ContentStore>> ContentStore::attach(
    const std::string& name) {
  using R = Result<std::unique_ptr<ContentStore>>;
  std::string path = region_path(name);
  int fd = ::open(path.c_str(), O_RDWR | O_CLOEXEC);
  if (fd < 0) return R::failure(StatusCode::ErrNoResource);

  uint32_t magic = 0;
  if (::pread(fd, &magic, sizeof(magic), 0) != sizeof(magic) ||
      magic != kRegionMagic) {
    ::close(fd);
    return R::failure(StatusCode::ErrSerialization);
  }
  struct stat st{};
  if (::fstat(fd, &st) != 0 ||
      static_cast<uint64_t>(st.st_size) < sizeof(Region)) {
    ::close(fd);
    return R::failure(StatusCode::ErrSerialization);
  }
  uint64_t total = static_cast<uint64_t>(st.st_size);
  void* map = ::mmap(nullptr, total, PROT_READ | PROT_WRITE, MAP_SHARED, fd, 0);
  if (map == MAP_FAILED) {
    ::close(fd);
    return R::failure(StatusCode::ErrNoResource);
  }
  auto* r = static_cast<Region*>(map);
  auto store = std::unique_ptr<ContentStore>(new ContentStore());
  store->region_ = r;
  store->data_ = static_cast<std::byte*>(map) + r->data_offset;
  store->mapped_size_ = total;
  store->fd_ = fd;
  store->owner_ = false;
  store->name_ = name;
  store->path_ = path;
  return R::success(std::move(store));
}

ContentStore::~ContentStore() {
  if (region_) ::munmap(region_, mapped_size_);
  if (fd_ >= 0) ::close(fd_);
  if (owner_) ::unlink(path_.c_str());
}

namespace {

class LockGuard {
 public:
  explicit LockGuard(pthread_mutex_t* m) : m_(m) { pthread_mutex_lock(m_); }
  ~LockGuard() { pthread_mutex_unlock(m_); }

 private:
  pthread_mutex_t* m_;
};

}  // namespace

Result<uint64_t> ContentStore::alloc(uint64_t length) {
  using R = Result<uint64_t>;
  Region* r = region_;
  uint64_t need = align_up(length);
  uint64_t offset = 0;
  uint64_t handle = 0;
  {
    LockGuard g(&r->lock);

    uint32_t slot = kMaxEntries;
    for (uint32_t i = 0; i < kMaxEntries; ++i) {
      if (r->entries[i].refcount == 0) {
        slot = i;
        break;
      }
    }
    if (slot == kMaxEntries) return R::failure(StatusCode::ErrNoResource);

    if (need > 0) {
      // First fit over the sorted free list.
      uint32_t b = r->free_count;
      for (uint32_t i = 0; i < r->free_count; ++i) {
        if (r->free_blocks[i].length >= need) {
          b = i;
          break;
        }
      }
      if (b == r->free_count) return R::failure(StatusCode::ErrNoResource);
      offset = r->free_blocks[b].offset;
      r->free_blocks[b].offset += need;
      r->free_blocks[b].length -= need;
      if (r->free_blocks[b].length == 0) {
        std::memmove(&r->free_blocks[b], &r->free_blocks[b + 1],
                     (r->free_count - b - 1) * sizeof(FreeBlock));
        r->free_count--;
      }
    }

    Entry& e = r->entries[slot];
    e.offset = offset;
    e.length = length;
    e.refcount = 1;
    e.generation++;  // first use makes it 1: handles are never 0
    r->used_bytes += need;
    r->live_handles++;
    handle = (static_cast<uint64_t>(e.generation) << kSlotBits) | slot;
  }
  // Zero-fill outside the region lock; nobody else can see this handle yet.
  if (length > 0) std::memset(data_ + offset, 0, length);
  return R::success(handle);
}

Result<uint64_t> ContentStore::put(std::span<const std::byte> bytes,
                                   uint64_t counted_payload) {
  auto h = alloc(bytes.size());
  if (!h.ok()) return h;
  auto v = get(h.value);
  if (!bytes.empty())
    std::memcpy(v.value.data(), bytes.data(), bytes.size());
  CopyCounter::add(counted_payload);
  return h;
}

Result<std::span<std::byte>> ContentStore::get(uint64_t handle) {
  using R = Result<std::span<std::byte>>;
  Region* r = region_;
  uint32_t slot = handle & kSlotMask;
  LockGuard g(&r->lock);
  if (slot >= kMaxEntries) return R::failure(StatusCode::ErrBadHandle);
  const Entry& e = r->entries[slot];
  if (e.refcount == 0 || (static_cast<uint64_t>(e.generation) << kSlotBits |
                          slot) != handle)
    return R::failure(StatusCode::ErrBadHandle);
  return R::success(std::span<std::byte>(data_ + e.offset, e.length));
}

StatusCode ContentStore::add_ref(uint64_t handle) {
  Region* r = region_;
  uint32_t slot = handle & kSlotMask;
  LockGuard g(&r->lock);
  if (slot >= kMaxEntries) return StatusCode::ErrBadHandle;
  Entry& e = r->entries[slot];
  if (e.refcount == 0 ||
      (static_cast<uint64_t>(e.generation) << kSlotBits | slot) != handle)
    return StatusCode::ErrBadHandle;
  e.refcount++;
  return StatusCode::Ok;
}

StatusCode ContentStore::release(uint64_t handle) {
  Region* r = region_;
  uint32_t slot = handle & kSlotMask;
  LockGuard g(&r->lock);
  if (slot >= kMaxEntries) return StatusCode::ErrBadHandle;
  Entry& e = r->entries[slot];
  if (e.refcount == 0 ||
      (static_cast<uint64_t>(e.generation) << kSlotBits | slot) != handle)
    return StatusCode::ErrBadHandle;
  if (--e.refcount > 0) return StatusCode::Ok;

  // Reclaim: return the block to the sorted free list, coalescing neighbors.
  uint64_t need = align_up(e.length);
  r->used_bytes -= need;
  r->live_handles--;
  if (need > 0) {
    uint32_t pos = 0;
    while (pos < r->free_count && r->free_blocks[pos].offset < e.offset) pos++;
    std::memmove(&r->free_blocks[pos + 1], &r->free_blocks[pos],
                 (r->free_count - pos) * sizeof(FreeBlock));
    r->free_blocks[pos] = {e.offset, need};
    r->free_count++;
    // Merge with successor, then predecessor.
    if (pos + 1 < r->free_count &&
        r->free_blocks[pos].offset + r->free_blocks[pos].length ==
            r->free_blocks[pos + 1].offset) {
      r->free_blocks[pos].length += r->free_blocks[pos + 1].length;
      std::memmove(&r->free_blocks[pos + 1], &r->free_blocks[pos + 2],
                   (r->free_count - pos - 2) * sizeof(FreeBlock));
      r->free_count--;
    }
    if (pos > 0 && r->free_blocks[pos - 1].offset +
                           r->free_blocks[pos - 1].length ==
                       r->free_blocks[pos].offset) {
      r->free_blocks[pos - 1].length += r->free_blocks[pos].length;
      std::memmove(&r->free_blocks[pos], &r->free_blocks[pos + 1],
                   (r->free_count - pos - 1) * sizeof(FreeBlock));
      r->free_count--;
    }
  }
  e.offset = 0;
  e.length = 0;
  return StatusCode::Ok;
}

Result<uint64_t> ContentStore::offset_of(uint64_t handle) {
  using R = Result<uint64_t>;
  Region* r = region_;
  uint32_t slot = handle & kSlotMask;
  LockGuard g(&r->lock);
  if (slot >= kMaxEntries) return R::failure(StatusCode::ErrBadHandle);
  const Entry& e = r->entries[slot];
  if (e.refcount == 0 ||
      (static_cast<uint64_t>(e.generation) << kSlotBits | slot) != handle)
    return R::failure(StatusCode::ErrBadHandle);
  return R::success(e.offset);
}

Result<std::span<std::byte>> ContentStore::view(uint64_t offset,
                                                uint64_t length) {
  using R = Result<std::span<std::byte>>;
  if (offset > region_->capacity || length > region_->capacity - offset)
    return R::failure(StatusCode::ErrBadArgument);
  return R::success(std::span<std::byte>(data_ + offset, length));
}

ContentStore::Stats ContentStore::stats() {
  LockGuard g(&region_->lock);
  return Stats{region_->capacity, region_->used_bytes, region_->live_handles};
}

}  // namespace halo::ipc
