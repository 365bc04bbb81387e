// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include "bftchain/codec.hpp"
#include "bftchain/crypto.hpp"
#include "bftchain/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bftchain
{

struct ViewMember
{
    ReplicaId id = 0;
    crypto::PublicKey permanentKey;
    // Absent when this member's fresh consensus key missed the
    // reconfiguration block; the owner disseminates it with its first
    // messages in the new view instead.
    std::optional<crypto::EndorsedKey> consensusKey;

    auto operator<=>(ViewMember const&) const = default;

    void
    encodeTo(Encoder& e) const
    {
        e.u32(id);
        e.obj(permanentKey);
        e.opt(consensusKey);
    }

    static ViewMember
    decodeFrom(Decoder& d)
    {
        ViewMember m;
        m.id = d.u32();
        m.permanentKey = d.obj<crypto::PublicKey>();
        m.consensusKey = d.opt<crypto::EndorsedKey>();
        return m;
    }
};

struct View
{
    ViewId id = 0;
    std::uint32_t f = 0;
    std::vector<ViewMember> members; // fixed order; indexes are protocol-visible

    std::uint32_t
    n() const
    {
        return static_cast<std::uint32_t>(members.size());
    }

    // Vote threshold for WRITE, ACCEPT and PERSIST collection: the smallest
    // size where any two quorums overlap in at least f+1 replicas, so the
    // overlap always contains a correct one. (n+f+1)/2 rounded UP -- for the
    // usual n = 3f+1 sizes the division is exact, but rounding down would
    // break the overlap for smaller f.
    std::uint32_t
    quorum() const
    {
        return (n() + f + 2) / 2;
    }

    static std::uint32_t
    maxFaulty(std::uint32_t n)
    {
        return n == 0 ? 0 : (n - 1) / 3;
    }

    bool contains(ReplicaId id) const;
    std::optional<std::uint32_t> indexOf(ReplicaId id) const;
    ViewMember const* member(ReplicaId id) const;

    // Structural checks: member ids distinct and sorted-unique order not
    // required, f within bound, every present consensus key endorsed by the
    // member's own permanent key for this view id. Returns an error
    // description or nullopt when valid.
    std::optional<std::string> validate() const;

    std::size_t consensusKeyCount() const;

    crypto::Digest digest() const;

    auto operator<=>(View const&) const = default;

    void encodeTo(Encoder& e) const;
    static View decodeFrom(Decoder& d);
};

// Resolves the signing key a (view, replica) pair is accountable to, pulling
// from view records first and from explicitly admitted late keys second.
// Both live replicas and the offline verifier route key lookups through this
// so the admission rules cannot drift apart.
class KeyDirectory
{
  public:
    void addView(View const& view);
    View const* view(ViewId id) const;

    // Accept a late-disseminated consensus key if its owner is a member of
    // that view and the endorsement verifies under the owner's permanent key.
    bool tryAdmit(crypto::EndorsedKey const& key);

    std::optional<crypto::PublicKey> resolve(ViewId viewId,
                                             ReplicaId owner) const;

  private:
    std::vector<View> mViews; // indexed by view id (contiguous from 0)
    std::vector<std::pair<std::pair<ViewId, ReplicaId>, crypto::PublicKey>>
        mAdmitted;
};

} // namespace bftchain
