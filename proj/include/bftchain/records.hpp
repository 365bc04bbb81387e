// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include "bftchain/block.hpp"
#include "bftchain/codec.hpp"
#include "bftchain/transaction.hpp"
#include "bftchain/types.hpp"
#include "bftchain/view.hpp"

#include <optional>

namespace bftchain
{

// On-disk ledger record stream. Each record is framed as
//   recordType   u8
//   blockNumber  u64 (big-endian)
//   payloadLen   u32 (big-endian)
//   payload      payloadLen bytes
//   checksum     u32 CRC32 over payload
// Records are append-only; a torn tail (incomplete frame or checksum
// mismatch) marks the end of the recoverable prefix.

enum class RecordType : std::uint8_t
{
    GENESIS = 0,
    TXBATCH = 1,
    RESULTS = 2,
    HEADER = 3,
    CERT = 4,
    RECONFIG_TXBATCH = 5,
};

char const* nameOf(RecordType t);

struct Record
{
    RecordType type = RecordType::GENESIS;
    BlockNum block = 0;
    Bytes payload;

    auto operator<=>(Record const&) const = default;
};

std::uint32_t payloadChecksum(ByteSpan payload);

Bytes frameRecord(Record const& rec);

struct ScanResult
{
    std::vector<Record> records;
    // Byte offset where the clean prefix ends; equals input size when the
    // whole stream parsed.
    std::size_t cleanEnd = 0;
    // Set when trailing bytes exist past cleanEnd (torn write or corruption).
    std::optional<std::string> tailError;
};

ScanResult scanRecords(ByteSpan stream);

// Payload of a TXBATCH record (and the leading part of RECONFIG_TXBATCH):
// the decided batch plus the consensus proof that authorizes it.
struct TxBatchPayload
{
    InstanceId consensusId = 0;
    Batch batch;
    ConsensusProof proof;

    auto operator<=>(TxBatchPayload const&) const = default;

    void
    encodeTo(Encoder& e) const
    {
        e.u64(consensusId);
        e.obj(batch);
        e.obj(proof);
    }

    static TxBatchPayload
    decodeFrom(Decoder& d)
    {
        TxBatchPayload p;
        p.consensusId = d.u64();
        p.batch = d.obj<Batch>();
        p.proof = d.obj<ConsensusProof>();
        return p;
    }
};

// Payload of a RECONFIG_TXBATCH record: the reconfiguration batch, its
// proof (under the pre-block view), the successor view, and the fresh
// consensus keys that made it into this block.
struct ReconfigPayload
{
    TxBatchPayload base;
    View newView;

    auto operator<=>(ReconfigPayload const&) const = default;

    void
    encodeTo(Encoder& e) const
    {
        e.obj(base);
        e.obj(newView);
    }

    static ReconfigPayload
    decodeFrom(Decoder& d)
    {
        ReconfigPayload p;
        p.base = d.obj<TxBatchPayload>();
        p.newView = d.obj<View>();
        return p;
    }
};

struct ResultsPayload
{
    std::vector<TxResult> results;

    auto operator<=>(ResultsPayload const&) const = default;

    void
    encodeTo(Encoder& e) const
    {
        e.list(results);
    }

    static ResultsPayload
    decodeFrom(Decoder& d)
    {
        ResultsPayload p;
        p.results = d.list<TxResult>();
        return p;
    }
};

crypto::Digest resultsDigest(std::vector<TxResult> const& results);

// header.txBatchHash commits to the ordered transactions together with the
// decision proof that authorized them.
crypto::Digest txBatchDigest(std::vector<Transaction> const& transactions,
                             ConsensusProof const& proof);

// Snapshot files carry one framed snapshot each. Two slots alternate
// (double buffering) so a crash during a snapshot write leaves the previous
// snapshot intact; the loader picks the valid slot with the highest
// sequence number.
Bytes frameSnapshotFile(std::uint64_t seq, Snapshot const& snapshot);
std::optional<std::pair<std::uint64_t, Snapshot>> parseSnapshotFile(
    ByteSpan content);
std::optional<Snapshot> loadLatestSnapshot(ByteSpan slot0, ByteSpan slot1);

} // namespace bftchain
