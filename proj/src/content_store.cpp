#include "tfl/content_store.hpp"

#include <fstream>
#include <mutex>

namespace tfl {

Cid::Cid(std::string hex) : hex_(std::move(hex)) {
    digest_from_hex(hex_);  // validates
}

Cid Cid::of(std::span<const std::uint8_t> content) {
    return Cid(to_hex(sha256(content)));
}

ContentStore::ContentStore(const ContentStore& other) {
    std::shared_lock lock(other.mutex_);
    blobs_ = other.blobs_;
}

ContentStore& ContentStore::operator=(const ContentStore& other) {
    if (this != &other) {
        std::scoped_lock lock(mutex_, other.mutex_);
        blobs_ = other.blobs_;
    }
    return *this;
}

Cid ContentStore::put(std::span<const std::uint8_t> content) {
    Cid cid = Cid::of(content);
    std::unique_lock lock(mutex_);
    blobs_.try_emplace(cid, content.begin(), content.end());
    return cid;
}

Cid ContentStore::put(std::string_view content) {
    return put(std::span(reinterpret_cast<const std::uint8_t*>(content.data()), content.size()));
}

Bytes ContentStore::get(const Cid& cid) const {
    Bytes bytes;
    {
        std::shared_lock lock(mutex_);
        auto it = blobs_.find(cid);
        if (it == blobs_.end()) {
            throw MissingArtifact("missing artifact " + cid.str());
        }
        bytes = it->second;
    }
    if (Cid::of(bytes) != cid) {
        throw StoreCorruption("stored bytes do not match address " + cid.str());
    }
    return bytes;
}

bool ContentStore::contains(const Cid& cid) const {
    std::shared_lock lock(mutex_);
    return blobs_.contains(cid);
}

std::size_t ContentStore::size() const {
    std::shared_lock lock(mutex_);
    return blobs_.size();
}

std::vector<Cid> ContentStore::cids() const {
    std::shared_lock lock(mutex_);
    std::vector<Cid> out;
    out.reserve(blobs_.size());
    for (const auto& [cid, _] : blobs_) {
        out.push_back(cid);
    }
    return out;
}

void ContentStore::dump(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    std::shared_lock lock(mutex_);
    for (const auto& [cid, bytes] : blobs_) {
        std::ofstream out(dir / cid.str(), std::ios::binary | std::ios::trunc);
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            throw std::runtime_error("cannot write artifact " + (dir / cid.str()).string());
        }
    }
}

}  // namespace tfl
