#include "tfl/content_store.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <thread>

namespace tfl {

struct ContentStoreTestAccess {
    static Bytes& raw(ContentStore& store, const Cid& cid) { return store.blobs_.at(cid); }
};

}  // namespace tfl

using namespace tfl;

TEST(ContentStore, PutIsIdempotent) {
    ContentStore s;
    const Cid a = s.put("hello");
    const Cid b = s.put("hello");
    EXPECT_EQ(a, b);
    EXPECT_EQ(s.size(), 1u);
}

TEST(ContentStore, EmptyContentDigest) {
    ContentStore s;
    EXPECT_EQ(s.put("").str(), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(ContentStore, KnownDigest) {
    ContentStore s;
    EXPECT_EQ(s.put("abc").str(), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(ContentStore, RoundTripBytes) {
    ContentStore s;
    const Bytes x{0, 1, 2, 255, 0, 7};
    const Cid c = s.put(x);
    EXPECT_EQ(s.get(c), x);
    EXPECT_EQ(Cid::of(s.get(c)), c);
}

TEST(ContentStore, DistinctContentDistinctCids) {
    ContentStore s;
    std::set<Cid> seen;
    for (int i = 0; i < 1000; ++i) {
        seen.insert(s.put("item-" + std::to_string(i)));
    }
    EXPECT_EQ(seen.size(), 1000u);
}

TEST(ContentStore, UnknownCidIsMissing) {
    ContentStore s;
    EXPECT_THROW(s.get(Cid(std::string(64, 'a'))), MissingArtifact);
}

TEST(ContentStore, CorruptedBytesDetected) {
    ContentStore s;
    const Cid c = s.put("payload");
    ContentStoreTestAccess::raw(s, c)[0] ^= 0x01;
    EXPECT_THROW(s.get(c), StoreCorruption);
}

TEST(Cid, RejectsMalformedHex) {
    EXPECT_THROW(Cid("abc"), std::invalid_argument);
    EXPECT_THROW(Cid(std::string(64, 'A')), std::invalid_argument);
    EXPECT_THROW(Cid(std::string(63, 'a') + "g"), std::invalid_argument);
}

TEST(ContentStore, ConcurrentIdenticalPutsConverge) {
    ContentStore s;
    std::vector<std::thread> threads;
    std::vector<Cid> results(8);
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&, t] {
            for (int i = 0; i < 200; ++i) {
                results[t] = s.put("shared");
                s.put("thread-" + std::to_string(t) + "-" + std::to_string(i));
                s.get(results[t]);
            }
        });
    }
    for (auto& th : threads) th.join();
    for (const auto& c : results) EXPECT_EQ(c, results[0]);
    EXPECT_EQ(s.size(), 1u + 8u * 200u);
}

TEST(ContentStore, DumpWritesOneFilePerCid) {
    ContentStore s;
    const Cid a = s.put("one");
    const Cid b = s.put("two");
    const auto dir = std::filesystem::temp_directory_path() / "tfl_store_dump_test";
    std::filesystem::remove_all(dir);
    s.dump(dir);
    for (const Cid& c : {a, b}) {
        std::ifstream in(dir / c.str(), std::ios::binary);
        const Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        EXPECT_EQ(Cid::of(bytes), c);
    }
    std::filesystem::remove_all(dir);
}
