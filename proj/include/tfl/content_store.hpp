#pragma once

// In-process content-addressed artifact store. Artifacts are addressed by the
// hex SHA-256 of their bytes.

#include <filesystem>
#include <map>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "tfl/hashing.hpp"

namespace tfl {

/// 64 lowercase hex characters.
class Cid {
public:
    Cid() = default;
    /// Throws std::invalid_argument unless `hex` is a well-formed CID.
    explicit Cid(std::string hex);

    static Cid of(std::span<const std::uint8_t> content);

    const std::string& str() const noexcept { return hex_; }
    bool empty() const noexcept { return hex_.empty(); }

    friend bool operator==(const Cid&, const Cid&) = default;
    friend auto operator<=>(const Cid&, const Cid&) = default;

private:
    std::string hex_;
};

class MissingArtifact : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class StoreCorruption : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ContentStore {
public:
    ContentStore() = default;
    ContentStore(const ContentStore& other);
    ContentStore& operator=(const ContentStore& other);

    /// Stores `content` and returns its CID. Re-putting identical content is a
    /// no-op returning the same CID.
    Cid put(std::span<const std::uint8_t> content);
    Cid put(std::string_view content);

    /// Throws MissingArtifact for unknown CIDs and StoreCorruption when the
    /// stored bytes no longer hash to their address.
    Bytes get(const Cid& cid) const;

    bool contains(const Cid& cid) const;
    std::size_t size() const;
    std::vector<Cid> cids() const;

    /// Writes every artifact to `dir/<cid>`.
    void dump(const std::filesystem::path& dir) const;

private:
    friend struct ContentStoreTestAccess;

    mutable std::shared_mutex mutex_;
    std::map<Cid, Bytes> blobs_;
};

}  // namespace tfl
