// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftchain/records.hpp"

#include <zlib.h>

namespace bftchain
{

char const*
nameOf(RecordType t)
{
    switch (t)
    {
    case RecordType::GENESIS:
        return "GENESIS";
    case RecordType::TXBATCH:
        return "TXBATCH";
    case RecordType::RESULTS:
        return "RESULTS";
    case RecordType::HEADER:
        return "HEADER";
    case RecordType::CERT:
        return "CERT";
    case RecordType::RECONFIG_TXBATCH:
        return "RECONFIG_TXBATCH";
    }
    return "UNKNOWN";
}

std::uint32_t
payloadChecksum(ByteSpan payload)
{
    auto crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, payload.data(), static_cast<uInt>(payload.size()));
    return static_cast<std::uint32_t>(crc);
}

Bytes
frameRecord(Record const& rec)
{
    Encoder e;
    e.u8(static_cast<std::uint8_t>(rec.type));
    e.u64(rec.block);
    e.bytes(rec.payload);
    e.u32(payloadChecksum(rec.payload));
    return e.take();
}

ScanResult
scanRecords(ByteSpan stream)
{
    ScanResult out;
    Decoder d(stream);
    std::size_t lastGood = 0;
    while (!d.done())
    {
        try
        {
            Record rec;
            auto type = d.u8();
            if (type > 5)
            {
                out.tailError = "unknown record type";
                break;
            }
            rec.type = static_cast<RecordType>(type);
            rec.block = d.u64();
            rec.payload = d.bytes();
            auto storedCrc = d.u32();
            if (storedCrc != payloadChecksum(rec.payload))
            {
                out.tailError = "payload checksum mismatch";
                break;
            }
            out.records.push_back(std::move(rec));
            lastGood = stream.size() - d.remaining();
        }
        catch (CodecError const&)
        {
            out.tailError = "truncated record frame";
            break;
        }
    }
    out.cleanEnd = lastGood;
    return out;
}

crypto::Digest
resultsDigest(std::vector<TxResult> const& results)
{
    Encoder e;
    e.str("results");
    e.list(results);
    return crypto::sha256(e.data());
}

crypto::Digest
txBatchDigest(std::vector<Transaction> const& transactions,
              ConsensusProof const& proof)
{
    Encoder e;
    e.str("tx-batch");
    e.list(transactions);
    e.obj(proof);
    return crypto::sha256(e.data());
}

namespace
{
constexpr std::uint32_t SNAPSHOT_MAGIC = 0x534e4150; // "SNAP"
}

Bytes
frameSnapshotFile(std::uint64_t seq, Snapshot const& snapshot)
{
    Encoder body;
    body.obj(snapshot);
    Encoder e;
    e.u32(SNAPSHOT_MAGIC);
    e.u64(seq);
    e.bytes(body.data());
    e.u32(payloadChecksum(body.data()));
    return e.take();
}

std::optional<std::pair<std::uint64_t, Snapshot>>
parseSnapshotFile(ByteSpan content)
{
    try
    {
        Decoder d(content);
        if (d.u32() != SNAPSHOT_MAGIC)
        {
            return std::nullopt;
        }
        auto seq = d.u64();
        auto body = d.bytes();
        auto crc = d.u32();
        d.expectDone();
        if (crc != payloadChecksum(body))
        {
            return std::nullopt;
        }
        return std::make_pair(seq, decodeFromBytes<Snapshot>(body));
    }
    catch (CodecError const&)
    {
        return std::nullopt;
    }
}

std::optional<Snapshot>
loadLatestSnapshot(ByteSpan slot0, ByteSpan slot1)
{
    auto a = parseSnapshotFile(slot0);
    auto b = parseSnapshotFile(slot1);
    if (a && b)
    {
        return a->first >= b->first ? a->second : b->second;
    }
    if (a)
    {
        return a->second;
    }
    if (b)
    {
        return b->second;
    }
    return std::nullopt;
}

} // namespace bftchain
