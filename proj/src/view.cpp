// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftchain/view.hpp"

#include <algorithm>
#include <set>

namespace bftchain
{

bool
View::contains(ReplicaId rid) const
{
    return indexOf(rid).has_value();
}

std::optional<std::uint32_t>
View::indexOf(ReplicaId rid) const
{
    for (std::uint32_t i = 0; i < members.size(); ++i)
    {
        if (members[i].id == rid)
        {
            return i;
        }
    }
    return std::nullopt;
}

ViewMember const*
View::member(ReplicaId rid) const
{
    auto idx = indexOf(rid);
    return idx ? &members[*idx] : nullptr;
}

std::optional<std::string>
View::validate() const
{
    if (members.empty())
    {
        return "view has no members";
    }
    if (f > maxFaulty(n()))
    {
        return "fault bound too large for membership size";
    }
    std::set<ReplicaId> ids;
    for (auto const& m : members)
    {
        if (!ids.insert(m.id).second)
        {
            return "duplicate member id";
        }
        if (m.consensusKey)
        {
            if (m.consensusKey->owner != m.id || m.consensusKey->viewId != id)
            {
                return "consensus key bound to wrong owner or view";
            }
            if (!m.consensusKey->endorsementValidUnder(m.permanentKey))
            {
                return "consensus key endorsement invalid";
            }
        }
    }
    return std::nullopt;
}

std::size_t
View::consensusKeyCount() const
{
    return static_cast<std::size_t>(
        std::count_if(members.begin(), members.end(),
                      [](auto const& m) { return m.consensusKey.has_value(); }));
}

crypto::Digest
View::digest() const
{
    Encoder e;
    e.str("view");
    encodeTo(e);
    return crypto::sha256(e.data());
}

void
View::encodeTo(Encoder& e) const
{
    e.u64(id);
    e.u32(f);
    e.list(members);
}

View
View::decodeFrom(Decoder& d)
{
    View v;
    v.id = d.u64();
    v.f = d.u32();
    v.members = d.list<ViewMember>();
    return v;
}

void
KeyDirectory::addView(View const& view)
{
    if (view.id != mViews.size())
    {
        throw std::logic_error("views must be added in id order from 0");
    }
    mViews.push_back(view);
}

View const*
KeyDirectory::view(ViewId id) const
{
    if (id >= mViews.size())
    {
        return nullptr;
    }
    return &mViews[id];
}

bool
KeyDirectory::tryAdmit(crypto::EndorsedKey const& key)
{
    auto const* v = view(key.viewId);
    if (!v)
    {
        return false;
    }
    auto const* m = v->member(key.owner);
    if (!m)
    {
        return false;
    }
    if (m->consensusKey)
    {
        // The view record already pins this member's key; a conflicting
        // late key is not admissible.
        return m->consensusKey->publicKey == key.publicKey;
    }
    auto slot = std::make_pair(key.viewId, key.owner);
    for (auto const& [k, pk] : mAdmitted)
    {
        if (k == slot)
        {
            return pk == key.publicKey; // first admission wins
        }
    }
    if (!key.endorsementValidUnder(m->permanentKey))
    {
        return false;
    }
    mAdmitted.emplace_back(slot, key.publicKey);
    return true;
}

std::optional<crypto::PublicKey>
KeyDirectory::resolve(ViewId viewId, ReplicaId owner) const
{
    auto const* v = view(viewId);
    if (!v)
    {
        return std::nullopt;
    }
    auto const* m = v->member(owner);
    if (!m)
    {
        return std::nullopt;
    }
    if (m->consensusKey)
    {
        return m->consensusKey->publicKey;
    }
    auto slot = std::make_pair(viewId, owner);
    for (auto const& [k, pk] : mAdmitted)
    {
        if (k == slot)
        {
            return pk;
        }
    }
    return std::nullopt;
}

} // namespace bftchain
