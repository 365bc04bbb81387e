// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftchain/messages.hpp"

namespace bftchain
{

char const*
nameOf(MsgType t)
{
    switch (t)
    {
    case MsgType::PROPOSE:
        return "PROPOSE";
    case MsgType::WRITE:
        return "WRITE";
    case MsgType::ACCEPT:
        return "ACCEPT";
    case MsgType::SYNC:
        return "SYNC";
    case MsgType::PERSIST:
        return "PERSIST";
    case MsgType::ST_REQ:
        return "ST_REQ";
    case MsgType::ST_REP:
        return "ST_REP";
    case MsgType::GRANT_REQ:
        return "GRANT_REQ";
    case MsgType::GRANT_REP:
        return "GRANT_REP";
    case MsgType::SUBMIT:
        return "SUBMIT";
    case MsgType::REPLY:
        return "REPLY";
    case MsgType::DECIDE:
        return "DECIDE";
    }
    return "UNKNOWN";
}

void
WireMessage::encodeTo(Encoder& e) const
{
    e.u8(static_cast<std::uint8_t>(type));
    e.u32(sender);
    e.u64(view);
    e.opt(lateKey);
    e.bytes(body);
}

WireMessage
WireMessage::decodeFrom(Decoder& d)
{
    WireMessage m;
    auto t = d.u8();
    if (t > static_cast<std::uint8_t>(MsgType::DECIDE))
    {
        throw CodecError("unknown message type");
    }
    m.type = static_cast<MsgType>(t);
    m.sender = d.u32();
    m.view = d.u64();
    m.lateKey = d.opt<crypto::EndorsedKey>();
    m.body = d.bytes();
    return m;
}

void
LockProof::encodeTo(Encoder& e) const
{
    e.u32(round);
    e.obj(batchHash);
    e.list(writeVotes);
}

LockProof
LockProof::decodeFrom(Decoder& d)
{
    LockProof p;
    p.round = d.u32();
    p.batchHash = d.obj<crypto::Digest>();
    p.writeVotes = d.list<SignedVote>();
    return p;
}

crypto::Digest
SyncReport::signingDigest(ViewId view) const
{
    Encoder e;
    e.str("sync-report");
    e.u64(view);
    e.u32(replica);
    e.u64(instance);
    e.u32(round);
    if (lock)
    {
        e.u8(1);
        e.u32(lock->round);
        e.obj(lock->batchHash);
    }
    else
    {
        e.u8(0);
    }
    return crypto::sha256(e.data());
}

void
SyncReport::encodeTo(Encoder& e) const
{
    e.u32(replica);
    e.u64(instance);
    e.u32(round);
    e.opt(lock);
    e.obj(signature);
}

SyncReport
SyncReport::decodeFrom(Decoder& d)
{
    SyncReport r;
    r.replica = d.u32();
    r.instance = d.u64();
    r.round = d.u32();
    r.lock = d.opt<LockProof>();
    r.signature = d.obj<crypto::Signature>();
    return r;
}

void
SyncCertificate::encodeTo(Encoder& e) const
{
    e.list(reports);
}

SyncCertificate
SyncCertificate::decodeFrom(Decoder& d)
{
    SyncCertificate c;
    c.reports = d.list<SyncReport>();
    return c;
}

void
ProposeMsg::encodeTo(Encoder& e) const
{
    e.u64(instance);
    e.u32(round);
    e.obj(batch);
    e.opt(syncCert);
}

ProposeMsg
ProposeMsg::decodeFrom(Decoder& d)
{
    ProposeMsg m;
    m.instance = d.u64();
    m.round = d.u32();
    m.batch = d.obj<Batch>();
    m.syncCert = d.opt<SyncCertificate>();
    return m;
}

void
WriteMsg::encodeTo(Encoder& e) const
{
    e.u64(instance);
    e.u32(round);
    e.obj(batchHash);
    e.obj(vote);
}

WriteMsg
WriteMsg::decodeFrom(Decoder& d)
{
    WriteMsg m;
    m.instance = d.u64();
    m.round = d.u32();
    m.batchHash = d.obj<crypto::Digest>();
    m.vote = d.obj<SignedVote>();
    return m;
}

void
AcceptMsg::encodeTo(Encoder& e) const
{
    e.u64(instance);
    e.u32(round);
    e.obj(batchHash);
    e.obj(vote);
}

AcceptMsg
AcceptMsg::decodeFrom(Decoder& d)
{
    AcceptMsg m;
    m.instance = d.u64();
    m.round = d.u32();
    m.batchHash = d.obj<crypto::Digest>();
    m.vote = d.obj<SignedVote>();
    return m;
}

void
SyncMsg::encodeTo(Encoder& e) const
{
    e.obj(report);
    e.opt(lockedBatch);
    e.opt(decidedProof);
}

SyncMsg
SyncMsg::decodeFrom(Decoder& d)
{
    SyncMsg m;
    m.report = d.obj<SyncReport>();
    m.lockedBatch = d.opt<Batch>();
    m.decidedProof = d.opt<ConsensusProof>();
    return m;
}

void
DecideMsg::encodeTo(Encoder& e) const
{
    e.u64(instance);
    e.obj(proof);
    e.opt(batch);
}

DecideMsg
DecideMsg::decodeFrom(Decoder& d)
{
    DecideMsg m;
    m.instance = d.u64();
    m.proof = d.obj<ConsensusProof>();
    m.batch = d.opt<Batch>();
    return m;
}

void
PersistMsg::encodeTo(Encoder& e) const
{
    e.u64(block);
    e.obj(headerHash);
    e.obj(vote);
    e.u8(answer ? 1 : 0);
}

PersistMsg
PersistMsg::decodeFrom(Decoder& d)
{
    PersistMsg m;
    m.block = d.u64();
    m.headerHash = d.obj<crypto::Digest>();
    m.vote = d.obj<SignedVote>();
    m.answer = d.u8() != 0;
    return m;
}

void
StReqMsg::encodeTo(Encoder& e) const
{
    e.u8(static_cast<std::uint8_t>(phase));
    e.u64(target);
    e.i64(fromBlock);
    e.u32(attempt);
}

StReqMsg
StReqMsg::decodeFrom(Decoder& d)
{
    StReqMsg m;
    auto p = d.u8();
    if (p > 1)
    {
        throw CodecError("unknown state transfer phase");
    }
    m.phase = static_cast<StPhase>(p);
    m.target = d.u64();
    m.fromBlock = d.i64();
    m.attempt = d.u32();
    return m;
}

void
StRepMsg::encodeTo(Encoder& e) const
{
    e.u8(static_cast<std::uint8_t>(kind));
    e.i64(latest);
    e.u64(target);
    e.i64(fromBlock);
    e.u32(attempt);
    e.bytes(recordStream);
    e.opt(snapshot);
    e.opt(snapshotDigest);
}

StRepMsg
StRepMsg::decodeFrom(Decoder& d)
{
    StRepMsg m;
    auto k = d.u8();
    if (k > 3)
    {
        throw CodecError("unknown state transfer reply kind");
    }
    m.kind = static_cast<StRepKind>(k);
    m.latest = d.i64();
    m.target = d.u64();
    m.fromBlock = d.i64();
    m.attempt = d.u32();
    m.recordStream = d.bytes();
    m.snapshot = d.opt<Snapshot>();
    m.snapshotDigest = d.opt<crypto::Digest>();
    return m;
}

crypto::Digest
GrantReqMsg::signingDigest() const
{
    Encoder e;
    e.str("grant-request");
    e.u8(static_cast<std::uint8_t>(purpose));
    e.u32(subject);
    e.obj(subjectPermanentKey);
    e.u64(viewId);
    return crypto::sha256(e.data());
}

void
GrantReqMsg::encodeTo(Encoder& e) const
{
    e.u8(static_cast<std::uint8_t>(purpose));
    e.u32(subject);
    e.obj(subjectPermanentKey);
    e.u64(viewId);
    e.obj(signature);
}

GrantReqMsg
GrantReqMsg::decodeFrom(Decoder& d)
{
    GrantReqMsg m;
    auto p = d.u8();
    if (p > 1)
    {
        throw CodecError("unknown grant purpose");
    }
    m.purpose = static_cast<reconfig::GrantPurpose>(p);
    m.subject = d.u32();
    m.subjectPermanentKey = d.obj<crypto::PublicKey>();
    m.viewId = d.u64();
    m.signature = d.obj<crypto::Signature>();
    return m;
}

void
GrantRepMsg::encodeTo(Encoder& e) const
{
    e.obj(grant);
}

GrantRepMsg
GrantRepMsg::decodeFrom(Decoder& d)
{
    GrantRepMsg m;
    m.grant = d.obj<reconfig::MembershipGrant>();
    return m;
}

void
SubmitMsg::encodeTo(Encoder& e) const
{
    e.obj(tx);
}

SubmitMsg
SubmitMsg::decodeFrom(Decoder& d)
{
    SubmitMsg m;
    m.tx = d.obj<Transaction>();
    return m;
}

void
ReplyMsg::encodeTo(Encoder& e) const
{
    e.u32(client);
    e.u64(sequence);
    e.u64(block);
    e.u32(position);
    e.u64(viewId);
    e.u32(viewN);
    e.u32(viewF);
    e.bytes(result);
}

ReplyMsg
ReplyMsg::decodeFrom(Decoder& d)
{
    ReplyMsg m;
    m.client = d.u32();
    m.sequence = d.u64();
    m.block = d.u64();
    m.position = d.u32();
    m.viewId = d.u64();
    m.viewN = d.u32();
    m.viewF = d.u32();
    m.result = d.bytes();
    return m;
}

} // namespace bftchain
