// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftchain/records.hpp"

#include "doctest.h"

#include <zlib.h>

using namespace bftchain;

namespace
{

Record
sampleRecord(BlockNum block, std::uint8_t fill, std::size_t len = 5)
{
    Record rec;
    rec.type = RecordType::HEADER;
    rec.block = block;
    rec.payload = Bytes(len, fill);
    return rec;
}

} // namespace

TEST_CASE("record framing layout is byte-exact")
{
    Record rec;
    rec.type = RecordType::TXBATCH;
    rec.block = 0x0102030405060708ull;
    rec.payload = {0xaa, 0xbb};

    // Independent construction of the expected frame.
    Bytes expected;
    expected.push_back(0x01); // TXBATCH
    for (auto b : {0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0x07, 0x08})
    {
        expected.push_back(static_cast<std::uint8_t>(b));
    }
    expected.insert(expected.end(), {0x00, 0x00, 0x00, 0x02}); // length
    expected.insert(expected.end(), {0xaa, 0xbb});             // payload
    auto crc = static_cast<std::uint32_t>(
        ::crc32(0L, rec.payload.data(), 2)); // zlib, the reference CRC32
    for (int shift = 24; shift >= 0; shift -= 8)
    {
        expected.push_back(static_cast<std::uint8_t>(crc >> shift));
    }

    auto framed = frameRecord(rec);
    CHECK(framed == expected);
    CHECK(framed.size() == 17 + rec.payload.size());
    CHECK(payloadChecksum(rec.payload) == crc);
}

TEST_CASE("a stream of records scans back intact")
{
    Bytes stream;
    std::vector<Record> written;
    for (BlockNum b = 1; b <= 5; ++b)
    {
        auto rec = sampleRecord(b, static_cast<std::uint8_t>(b),
                                static_cast<std::size_t>(3 * b));
        written.push_back(rec);
        auto frame = frameRecord(rec);
        stream.insert(stream.end(), frame.begin(), frame.end());
    }
    auto scan = scanRecords(stream);
    CHECK(scan.records == written);
    CHECK(scan.cleanEnd == stream.size());
    CHECK_FALSE(scan.tailError.has_value());
}

TEST_CASE("every possible torn tail recovers the intact prefix")
{
    Bytes stream;
    std::vector<std::size_t> ends = {0}; // clean prefix ends
    for (BlockNum b = 1; b <= 4; ++b)
    {
        auto frame = frameRecord(sampleRecord(b, 0x30, 8));
        stream.insert(stream.end(), frame.begin(), frame.end());
        ends.push_back(stream.size());
    }
    for (std::size_t cut = 0; cut <= stream.size(); ++cut)
    {
        Bytes prefix(stream.begin(), stream.begin() + cut);
        auto scan = scanRecords(prefix);
        // The scan must recover exactly the records whose frames fit.
        std::size_t whole = 0;
        while (whole + 1 < ends.size() && ends[whole + 1] <= cut)
        {
            ++whole;
        }
        CHECK(scan.records.size() == whole);
        CHECK(scan.cleanEnd == ends[whole]);
        CHECK(scan.tailError.has_value() == (cut != ends[whole]));
    }
}

TEST_CASE("a corrupted payload byte cuts the stream at that record")
{
    Bytes stream;
    for (BlockNum b = 1; b <= 3; ++b)
    {
        auto frame = frameRecord(sampleRecord(b, 0x11, 16));
        stream.insert(stream.end(), frame.begin(), frame.end());
    }
    auto oneFrame = stream.size() / 3;
    // Flip a byte inside the second record's payload.
    stream[oneFrame + 17 - 4 - 1] ^= 0x01;
    auto scan = scanRecords(stream);
    CHECK(scan.records.size() == 1);
    CHECK(scan.cleanEnd == oneFrame);
    REQUIRE(scan.tailError.has_value());
}

TEST_CASE("a corrupted type or length field is also caught")
{
    auto frame = frameRecord(sampleRecord(1, 0x22, 4));
    SUBCASE("unknown record type")
    {
        frame[0] = 0x77;
        auto scan = scanRecords(frame);
        CHECK(scan.records.empty());
        CHECK(scan.tailError.has_value());
    }
    SUBCASE("length points past the end")
    {
        frame[9] = 0x7f; // most significant length byte
        auto scan = scanRecords(frame);
        CHECK(scan.records.empty());
        CHECK(scan.tailError.has_value());
    }
}

TEST_CASE("snapshot files round trip and reject corruption")
{
    Snapshot snap;
    snap.lastBlockCovered = 32;
    snap.statePayload = Bytes(100, 0x44);
    snap.stateDigest = crypto::sha256(snap.statePayload);

    auto file = frameSnapshotFile(7, snap);
    auto parsed = parseSnapshotFile(file);
    REQUIRE(parsed.has_value());
    CHECK(parsed->first == 7);
    CHECK(parsed->second.lastBlockCovered == 32);
    CHECK(parsed->second.statePayload == snap.statePayload);

    SUBCASE("any flipped byte invalidates the file")
    {
        for (std::size_t pos : {std::size_t{0}, file.size() / 2,
                                file.size() - 1})
        {
            auto damaged = file;
            damaged[pos] ^= 0x01;
            CHECK_FALSE(parseSnapshotFile(damaged).has_value());
        }
    }
    SUBCASE("a truncated file is rejected")
    {
        Bytes half(file.begin(), file.begin() + file.size() / 2);
        CHECK_FALSE(parseSnapshotFile(half).has_value());
    }
}

TEST_CASE("the snapshot loader survives one torn slot")
{
    Snapshot older;
    older.lastBlockCovered = 16;
    older.statePayload = Bytes(10, 1);
    older.stateDigest = crypto::sha256(older.statePayload);
    Snapshot newer;
    newer.lastBlockCovered = 32;
    newer.statePayload = Bytes(10, 2);
    newer.stateDigest = crypto::sha256(newer.statePayload);

    auto slotA = frameSnapshotFile(4, older);
    auto slotB = frameSnapshotFile(5, newer);

    SUBCASE("both intact: the higher sequence wins")
    {
        auto picked = loadLatestSnapshot(slotA, slotB);
        REQUIRE(picked.has_value());
        CHECK(picked->lastBlockCovered == 32);
    }
    SUBCASE("newer slot torn mid-write: the older survives")
    {
        slotB.resize(slotB.size() / 2);
        auto picked = loadLatestSnapshot(slotA, slotB);
        REQUIRE(picked.has_value());
        CHECK(picked->lastBlockCovered == 16);
    }
    SUBCASE("both torn: nothing to load")
    {
        slotA.resize(3);
        slotB.clear();
        CHECK_FALSE(loadLatestSnapshot(slotA, slotB).has_value());
    }
}
