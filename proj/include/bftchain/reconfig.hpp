// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include "bftchain/block.hpp"
#include "bftchain/crypto.hpp"
#include "bftchain/transaction.hpp"
#include "bftchain/view.hpp"

#include <map>
#include <optional>
#include <vector>

namespace bftchain::reconfig
{

enum class ReconfigKind : std::uint8_t
{
    JOIN = 0,
    LEAVE = 1,
    REMOVE = 2,
};

enum class GrantPurpose : std::uint8_t
{
    JOIN = 0,
    LEAVE = 1,
};

// A current member's signed permission for a membership change, carrying the
// granter's fresh consensus key for the successor view. Signed with the
// granter's permanent key; grants referencing a stale view id are worthless.
struct MembershipGrant
{
    GrantPurpose purpose = GrantPurpose::JOIN;
    ReplicaId granter = 0;
    ProcessId subject = 0;
    crypto::PublicKey subjectPermanentKey; // binds the candidate's identity
    ViewId viewId = 0;                     // view in force when granted
    crypto::EndorsedKey granterNextKey;    // granter's key for viewId + 1
    crypto::Signature signature;

    auto operator<=>(MembershipGrant const&) const = default;

    crypto::Digest signingDigest() const;

    void
    encodeTo(Encoder& e) const
    {
        e.u8(static_cast<std::uint8_t>(purpose));
        e.u32(granter);
        e.u32(subject);
        e.obj(subjectPermanentKey);
        e.u64(viewId);
        e.obj(granterNextKey);
        e.obj(signature);
    }

    static MembershipGrant
    decodeFrom(Decoder& d)
    {
        MembershipGrant g;
        auto p = d.u8();
        if (p > 1)
        {
            throw CodecError("unknown grant purpose");
        }
        g.purpose = static_cast<GrantPurpose>(p);
        g.granter = d.u32();
        g.subject = d.u32();
        g.subjectPermanentKey = d.obj<crypto::PublicKey>();
        g.viewId = d.u64();
        g.granterNextKey = d.obj<crypto::EndorsedKey>();
        g.signature = d.obj<crypto::Signature>();
        return g;
    }
};

// Payload of a reconfiguration transaction. Issued (and signed with the
// permanent key of) the join candidate, the leaver, or a removal voter.
struct ReconfigRequest
{
    ReconfigKind kind = ReconfigKind::JOIN;
    ProcessId subject = 0;
    crypto::PublicKey subjectPermanentKey; // join only: candidate identity
    ViewId viewId = 0;                     // view in force when issued
    // join: the candidate's own consensus key for the next view;
    // remove: the voter's consensus key for the next view; absent for leave.
    std::optional<crypto::EndorsedKey> issuerNextKey;
    std::vector<MembershipGrant> grants; // join/leave; empty for remove
    crypto::Signature signature;

    crypto::Digest signingDigest(ClientId issuer,
                                 std::uint64_t sequence) const;

    void
    encodeTo(Encoder& e) const
    {
        e.u8(static_cast<std::uint8_t>(kind));
        e.u32(subject);
        e.obj(subjectPermanentKey);
        e.u64(viewId);
        e.opt(issuerNextKey);
        e.list(grants);
        e.obj(signature);
    }

    static ReconfigRequest
    decodeFrom(Decoder& d)
    {
        ReconfigRequest r;
        auto k = d.u8();
        if (k > 2)
        {
            throw CodecError("unknown reconfiguration kind");
        }
        r.kind = static_cast<ReconfigKind>(k);
        r.subject = d.u32();
        r.subjectPermanentKey = d.obj<crypto::PublicKey>();
        r.viewId = d.u64();
        r.issuerNextKey = d.opt<crypto::EndorsedKey>();
        r.grants = d.list<MembershipGrant>();
        r.signature = d.obj<crypto::Signature>();
        return r;
    }
};

Transaction makeReconfigTransaction(ClientId issuer, std::uint64_t sequence,
                                    crypto::PermanentKeypair const& issuerKey,
                                    ReconfigRequest req);

// Per-transaction outcome recorded in a reconfiguration block's results.
struct ReconfigResult
{
    bool accepted = false;
    Bytes newViewBytes; // canonical View encoding when accepted

    void
    encodeTo(Encoder& e) const
    {
        e.u8(accepted ? 1 : 0);
        e.bytes(newViewBytes);
    }

    static ReconfigResult
    decodeFrom(Decoder& d)
    {
        ReconfigResult r;
        r.accepted = d.u8() != 0;
        r.newViewBytes = d.bytes();
        return r;
    }
};

// Outcome of validating a reconfiguration batch against the view it would
// execute under.
struct ReconfigPlan
{
    View newView;
    std::vector<bool> txAccepted; // parallel to the batch's transactions
};

// Deterministically validates and composes a reconfiguration batch:
// transactions apply in batch order against the intermediate membership,
// each change requiring exactly (intermediate n − intermediate f) distinct
// valid grants or votes, with the subject excluded from its own granter or
// voter set. Transactions whose sequence number is not fresh for their
// client (per lastExecutedSeq, the dedup state after the preceding block)
// are rejected, keeping the plan a pure function of the executed prefix.
// Returns nullopt when the batch triggers no membership change (such a
// batch is not allowed to form a block).
std::optional<ReconfigPlan>
validateReconfigBatch(View const& currentView,
                      std::vector<Transaction> const& txs,
                      std::map<ClientId, std::uint64_t> const& lastExecutedSeq);

} // namespace bftchain::reconfig
