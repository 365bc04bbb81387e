// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include "bftchain/codec.hpp"
#include "bftchain/crypto.hpp"
#include "bftchain/transaction.hpp"
#include "bftchain/types.hpp"
#include "bftchain/view.hpp"

#include <optional>

namespace bftchain
{

enum class BatchKind : std::uint8_t
{
    APPLICATION = 0,
    RECONFIGURATION = 1,
};

// What a leader proposes and a consensus instance decides on.
struct Batch
{
    std::uint64_t assemblyTimeUs = 0; // leader-local, carried for diagnostics
    BatchKind kind = BatchKind::APPLICATION;
    std::vector<Transaction> transactions;

    auto operator<=>(Batch const&) const = default;

    void
    encodeTo(Encoder& e) const
    {
        e.u64(assemblyTimeUs);
        e.u8(static_cast<std::uint8_t>(kind));
        e.list(transactions);
    }

    static Batch
    decodeFrom(Decoder& d)
    {
        Batch b;
        b.assemblyTimeUs = d.u64();
        auto k = d.u8();
        if (k > 1)
        {
            throw CodecError("unknown batch kind");
        }
        b.kind = static_cast<BatchKind>(k);
        b.transactions = d.list<Transaction>();
        return b;
    }

    crypto::Digest
    digest() const
    {
        Encoder e;
        e.str("batch");
        encodeTo(e);
        return crypto::sha256(e.data());
    }
};

// One replica's signature, optionally carrying the late-disseminated
// consensus key it was made with (when that key missed the view record).
struct SignedVote
{
    ReplicaId voter = 0;
    crypto::Signature signature;
    std::optional<crypto::EndorsedKey> lateKey;

    auto operator<=>(SignedVote const&) const = default;

    void
    encodeTo(Encoder& e) const
    {
        e.u32(voter);
        e.obj(signature);
        e.opt(lateKey);
    }

    static SignedVote
    decodeFrom(Decoder& d)
    {
        SignedVote v;
        v.voter = d.u32();
        v.signature = d.obj<crypto::Signature>();
        v.lateKey = d.opt<crypto::EndorsedKey>();
        return v;
    }
};

// Statements signed by per-view consensus keys. ACCEPT deliberately omits the
// round so that votes cast in different rounds for the same value aggregate
// into one decision proof; WRITE includes it because a write quorum is a
// round-scoped lock.
crypto::Digest writeVoteDigest(ViewId view, InstanceId instance,
                               std::uint32_t round,
                               crypto::Digest const& batchHash);
crypto::Digest acceptVoteDigest(ViewId view, InstanceId instance,
                                crypto::Digest const& batchHash);

// Quorum of ACCEPT signatures proving instance `instance` decided the batch
// with hash `batchHash` in view `view` (the view is recorded by the block
// position; verification supplies it).
struct ConsensusProof
{
    InstanceId instance = 0;
    crypto::Digest batchHash;
    std::vector<SignedVote> votes;

    auto operator<=>(ConsensusProof const&) const = default;

    void
    encodeTo(Encoder& e) const
    {
        e.u64(instance);
        e.obj(batchHash);
        e.list(votes);
    }

    static ConsensusProof
    decodeFrom(Decoder& d)
    {
        ConsensusProof p;
        p.instance = d.u64();
        p.batchHash = d.obj<crypto::Digest>();
        p.votes = d.list<SignedVote>();
        return p;
    }
};

// Counts distinct members of `view` whose signature over `statement`
// verifies; late keys are admitted through `keys` on the fly.
std::uint32_t countValidVotes(std::vector<SignedVote> const& votes,
                              crypto::Digest const& statement,
                              View const& view, KeyDirectory& keys);

bool verifyDecisionProof(ConsensusProof const& proof, View const& view,
                         KeyDirectory& keys);

struct BlockHeader
{
    BlockNum number = 0;
    std::int64_t lastReconfig = -1;   // block number of latest reconfiguration
    std::int64_t lastCheckpoint = -1; // block number of latest checkpoint
    crypto::Digest txBatchHash;
    crypto::Digest resultsHash;
    crypto::Digest prevHash; // hash of previous header; hash of empty string
                             // for block 1

    auto operator<=>(BlockHeader const&) const = default;

    void
    encodeTo(Encoder& e) const
    {
        e.u64(number);
        e.i64(lastReconfig);
        e.i64(lastCheckpoint);
        e.obj(txBatchHash);
        e.obj(resultsHash);
        e.obj(prevHash);
    }

    static BlockHeader
    decodeFrom(Decoder& d)
    {
        BlockHeader h;
        h.number = d.u64();
        h.lastReconfig = d.i64();
        h.lastCheckpoint = d.i64();
        h.txBatchHash = d.obj<crypto::Digest>();
        h.resultsHash = d.obj<crypto::Digest>();
        h.prevHash = d.obj<crypto::Digest>();
        return h;
    }

    crypto::Digest
    digest() const
    {
        return crypto::sha256(encodeToBytes(*this));
    }
};

// Durability certificate: quorum of signatures over the header hash,
// collected in the PERSIST round of the strong persistence variant.
// PERSIST votes sign the header digest itself; every other statement in the
// system is domain-tagged, so certificate signatures cannot be confused with
// consensus votes.
struct Certificate
{
    BlockNum block = 0;
    std::vector<SignedVote> votes;

    auto operator<=>(Certificate const&) const = default;

    void
    encodeTo(Encoder& e) const
    {
        e.u64(block);
        e.list(votes);
    }

    static Certificate
    decodeFrom(Decoder& d)
    {
        Certificate c;
        c.block = d.u64();
        c.votes = d.list<SignedVote>();
        return c;
    }
};

bool verifyCertificate(Certificate const& cert,
                       crypto::Digest const& headerHash, View const& view,
                       KeyDirectory& keys);

enum class PersistenceVariant : std::uint8_t
{
    STRONG = 0, // sync header, then certificate round, reply after certificate
    WEAK = 1,   // sync header, no certificates
    LAMBDA = 2, // background flush every few records, no explicit sync
    MEMORY = 3, // no storage stage at all
};

char const* nameOf(PersistenceVariant v);
std::optional<PersistenceVariant> persistenceVariantFromString(
    std::string_view s);

struct GenesisBlock
{
    View initialView;
    std::uint32_t checkpointPeriod = 16; // blocks between snapshots
    PersistenceVariant persistence = PersistenceVariant::STRONG;
    Bytes appConfig; // opaque to the chain; interpreted by the application

    void
    encodeTo(Encoder& e) const
    {
        e.obj(initialView);
        e.u32(checkpointPeriod);
        e.u8(static_cast<std::uint8_t>(persistence));
        e.bytes(appConfig);
    }

    static GenesisBlock
    decodeFrom(Decoder& d)
    {
        GenesisBlock g;
        g.initialView = d.obj<View>();
        g.checkpointPeriod = d.u32();
        auto p = d.u8();
        if (p > 3)
        {
            throw CodecError("unknown persistence variant");
        }
        g.persistence = static_cast<PersistenceVariant>(p);
        g.appConfig = d.bytes();
        return g;
    }

    // Genesis comes out of an offline ceremony, so it must carry a consensus
    // key for every member; later views may omit up to f of them.
    std::optional<std::string> validate() const;

    crypto::Digest
    digest() const
    {
        Encoder e;
        e.str("genesis");
        encodeTo(e);
        return crypto::sha256(e.data());
    }
};

struct Snapshot
{
    BlockNum lastBlockCovered = 0;
    crypto::Digest stateDigest; // hash of statePayload
    Bytes statePayload;

    auto operator<=>(Snapshot const&) const = default;

    void
    encodeTo(Encoder& e) const
    {
        e.u64(lastBlockCovered);
        e.obj(stateDigest);
        e.bytes(statePayload);
    }

    static Snapshot
    decodeFrom(Decoder& d)
    {
        Snapshot s;
        s.lastBlockCovered = d.u64();
        s.stateDigest = d.obj<crypto::Digest>();
        s.statePayload = d.bytes();
        return s;
    }
};

} // namespace bftchain
