// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include "bftchain/block.hpp"
#include "bftchain/codec.hpp"
#include "bftchain/crypto.hpp"
#include "bftchain/reconfig.hpp"
#include "bftchain/transaction.hpp"

#include <optional>
#include <vector>

namespace bftchain
{

enum class MsgType : std::uint8_t
{
    PROPOSE = 0,
    WRITE = 1,
    ACCEPT = 2,
    SYNC = 3,
    PERSIST = 4,
    ST_REQ = 5,
    ST_REP = 6,
    GRANT_REQ = 7,
    GRANT_REP = 8,
    SUBMIT = 9,
    REPLY = 10,
    DECIDE = 11,
};

char const* nameOf(MsgType t);

// Transport envelope. Point-to-point authenticity comes from the transport
// (in-memory delivery or per-link MACs); only votes and reports that third
// parties must re-verify later carry their own signatures. lateKey piggybacks
// the sender's endorsed consensus key while the installed view record is
// missing it.
struct WireMessage
{
    MsgType type = MsgType::SUBMIT;
    ProcessId sender = 0;
    ViewId view = 0;
    std::optional<crypto::EndorsedKey> lateKey;
    Bytes body;

    void encodeTo(Encoder& e) const;
    static WireMessage decodeFrom(Decoder& d);
};

template <typename Body>
WireMessage
makeMessage(MsgType type, ProcessId sender, ViewId view, Body const& body)
{
    WireMessage m;
    m.type = type;
    m.sender = sender;
    m.view = view;
    m.body = encodeToBytes(body);
    return m;
}

template <typename Body>
Body
parseBody(WireMessage const& m)
{
    return decodeFromBytes<Body>(m.body);
}

// --- consensus ---

// A write-quorum lock carried in round-change reports: proof that some round
// locked this batch hash, transferable because the write votes are signed.
struct LockProof
{
    std::uint32_t round = 0;
    crypto::Digest batchHash;
    std::vector<SignedVote> writeVotes;

    void encodeTo(Encoder& e) const;
    static LockProof decodeFrom(Decoder& d);
};

struct SyncReport
{
    ReplicaId replica = 0;
    InstanceId instance = 0;
    std::uint32_t round = 0; // the round being synchronized to
    std::optional<LockProof> lock;
    crypto::Signature signature;

    // Signs the lock summary (round, hash), not the votes: the votes prove
    // themselves.
    crypto::Digest signingDigest(ViewId view) const;

    void encodeTo(Encoder& e) const;
    static SyncReport decodeFrom(Decoder& d);
};

// Quorum of round-change reports justifying a round > 0 proposal.
struct SyncCertificate
{
    std::vector<SyncReport> reports;

    void encodeTo(Encoder& e) const;
    static SyncCertificate decodeFrom(Decoder& d);
};

struct ProposeMsg
{
    InstanceId instance = 0;
    std::uint32_t round = 0;
    Batch batch;
    std::optional<SyncCertificate> syncCert; // mandatory when round > 0

    void encodeTo(Encoder& e) const;
    static ProposeMsg decodeFrom(Decoder& d);
};

struct WriteMsg
{
    InstanceId instance = 0;
    std::uint32_t round = 0;
    crypto::Digest batchHash;
    SignedVote vote;

    void encodeTo(Encoder& e) const;
    static WriteMsg decodeFrom(Decoder& d);
};

struct AcceptMsg
{
    InstanceId instance = 0;
    std::uint32_t round = 0; // bookkeeping only; the vote digest omits it
    crypto::Digest batchHash;
    SignedVote vote;

    void encodeTo(Encoder& e) const;
    static AcceptMsg decodeFrom(Decoder& d);
};

struct SyncMsg
{
    SyncReport report;
    std::optional<Batch> lockedBatch; // batch behind the lock, when held
    // Carried when the reporter already decided: the exact proof bytes it
    // used, so a round change relays the one canonical proof instead of
    // assembling a second one.
    std::optional<ConsensusProof> decidedProof;

    void encodeTo(Encoder& e) const;
    static SyncMsg decodeFrom(Decoder& d);
};

// Every replica assembles the block for instance k around the same proof, so
// the proof is chosen once -- by the round leader that saw the deciding
// accept quorum -- and relayed. Blocks hash the proof into their headers;
// without a single canonical proof, replicas would build unequal blocks from
// equally valid vote subsets.
struct DecideMsg
{
    InstanceId instance = 0;
    ConsensusProof proof;
    std::optional<Batch> batch; // attached when answering a lagging replica

    void encodeTo(Encoder& e) const;
    static DecideMsg decodeFrom(Decoder& d);
};

// Durability vote over a closed block's header; quorums of these form the
// persistence certificates appended to the ledger.
struct PersistMsg
{
    BlockNum block = 0;
    crypto::Digest headerHash;
    SignedVote vote;
    // Set on votes sent to help a straggler finish an old block. An answer
    // never triggers a counter-answer, otherwise two replicas that are both
    // past the block would bounce votes at each other indefinitely.
    bool answer = false;

    void encodeTo(Encoder& e) const;
    static PersistMsg decodeFrom(Decoder& d);
};

// --- state transfer ---

enum class StPhase : std::uint8_t
{
    PROBE = 0,
    FETCH = 1,
};

struct StReqMsg
{
    StPhase phase = StPhase::PROBE;
    BlockNum target = 0;    // FETCH: highest block to hand over
    std::int64_t fromBlock = -1; // FETCH: requester's durable prefix end
    std::uint32_t attempt = 0;   // FETCH: rotates the designated responder

    void encodeTo(Encoder& e) const;
    static StReqMsg decodeFrom(Decoder& d);
};

enum class StRepKind : std::uint8_t
{
    PROBE = 0,
    FULL = 1,
    DIGEST = 2,
    UNAVAILABLE = 3,
};

struct StRepMsg
{
    StRepKind kind = StRepKind::PROBE;
    std::int64_t latest = -1; // PROBE: responder's highest durable block
    BlockNum target = 0;      // FULL/DIGEST: echo of the request
    std::int64_t fromBlock = -1;
    std::uint32_t attempt = 0;
    // FULL: ledger-framed records covering (fromBlock, target], plus the
    // snapshot at the latest checkpoint boundary when one spares replay.
    Bytes recordStream;
    std::optional<Snapshot> snapshot;
    // DIGEST: hash of the snapshot the full responder must be sending (or
    // absent when the canonical reply carries no snapshot).
    std::optional<crypto::Digest> snapshotDigest;

    void encodeTo(Encoder& e) const;
    static StRepMsg decodeFrom(Decoder& d);
};

// --- membership ---

// A candidate (join) or member (leave) asking current members to co-sign
// its membership change.
struct GrantReqMsg
{
    reconfig::GrantPurpose purpose = reconfig::GrantPurpose::JOIN;
    ProcessId subject = 0;
    crypto::PublicKey subjectPermanentKey;
    ViewId viewId = 0;
    crypto::Signature signature; // subject's permanent key

    crypto::Digest signingDigest() const;

    void encodeTo(Encoder& e) const;
    static GrantReqMsg decodeFrom(Decoder& d);
};

struct GrantRepMsg
{
    reconfig::MembershipGrant grant;

    void encodeTo(Encoder& e) const;
    static GrantRepMsg decodeFrom(Decoder& d);
};

// --- clients ---

struct SubmitMsg
{
    Transaction tx;

    void encodeTo(Encoder& e) const;
    static SubmitMsg decodeFrom(Decoder& d);
};

struct ReplyMsg
{
    ClientId client = 0;
    std::uint64_t sequence = 0;
    BlockNum block = 0;
    std::uint32_t position = 0;
    ViewId viewId = 0;    // view in force when the reply was sent
    std::uint32_t viewN = 0;
    std::uint32_t viewF = 0;
    Bytes result;

    void encodeTo(Encoder& e) const;
    static ReplyMsg decodeFrom(Decoder& d);
};

} // namespace bftchain
