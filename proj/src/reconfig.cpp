// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftchain/reconfig.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace bftchain::reconfig
{

crypto::Digest
MembershipGrant::signingDigest() const
{
    Encoder e;
    e.str("membership-grant");
    e.u8(static_cast<std::uint8_t>(purpose));
    e.u32(granter);
    e.u32(subject);
    e.obj(subjectPermanentKey);
    e.u64(viewId);
    e.obj(granterNextKey);
    return crypto::sha256(e.data());
}

crypto::Digest
ReconfigRequest::signingDigest(ClientId issuer, std::uint64_t sequence) const
{
    Encoder e;
    e.str("reconfig-request");
    e.u32(issuer);
    e.u64(sequence);
    e.u8(static_cast<std::uint8_t>(kind));
    e.u32(subject);
    e.obj(subjectPermanentKey);
    e.u64(viewId);
    e.opt(issuerNextKey);
    e.list(grants);
    return crypto::sha256(e.data());
}

Transaction
makeReconfigTransaction(ClientId issuer, std::uint64_t sequence,
                        crypto::PermanentKeypair const& issuerKey,
                        ReconfigRequest req)
{
    Transaction tx;
    tx.client = issuer;
    tx.sequence = sequence;
    tx.kind = TxKind::RECONFIGURATION;
    req.signature = issuerKey.sign(req.signingDigest(issuer, sequence));
    tx.payload = encodeToBytes(req);
    return tx;
}

namespace
{

// Working membership while composing a batch: survivors keep the current
// view's order, joiners append in batch order.
struct PendingMember
{
    ReplicaId id;
    crypto::PublicKey permanentKey;
};

struct Composer
{
    ViewId currentViewId;
    ViewId nextViewId;
    std::vector<PendingMember> members;
    std::map<ReplicaId, crypto::EndorsedKey> nextKeys;
    // remove-vote tallies: target -> distinct voters seen so far
    std::map<ReplicaId, std::set<ReplicaId>> removeVotes;
    bool changed = false;

    PendingMember const*
    find(ProcessId id) const
    {
        for (auto const& m : members)
        {
            if (m.id == id)
            {
                return &m;
            }
        }
        return nullptr;
    }

    std::uint32_t
    threshold() const
    {
        auto n = static_cast<std::uint32_t>(members.size());
        return n - View::maxFaulty(n);
    }

    bool
    collectNextKey(ReplicaId owner, crypto::PublicKey const& permanentKey,
                   crypto::EndorsedKey const& key)
    {
        if (key.owner != owner || key.viewId != nextViewId)
        {
            return false;
        }
        if (!key.endorsementValidUnder(permanentKey))
        {
            return false;
        }
        auto it = nextKeys.find(owner);
        if (it != nextKeys.end())
        {
            // A member must present one key per view; conflicting keys from
            // the same owner are rejected outright.
            return it->second.publicKey == key.publicKey;
        }
        nextKeys.emplace(owner, key);
        return true;
    }

    // Validates one grant against the intermediate membership and, on
    // success, records the granter's next-view key. Returns the granter id.
    std::optional<ReplicaId>
    checkGrant(MembershipGrant const& g, GrantPurpose purpose,
               ProcessId subject, crypto::PublicKey const& subjectKey)
    {
        if (g.purpose != purpose || g.subject != subject ||
            g.subjectPermanentKey != subjectKey || g.viewId != currentViewId)
        {
            return std::nullopt;
        }
        if (g.granter == subject)
        {
            // The subject never vouches for its own change.
            return std::nullopt;
        }
        auto const* granter = find(g.granter);
        if (!granter)
        {
            return std::nullopt;
        }
        if (!crypto::verify(granter->permanentKey, g.signingDigest(),
                            g.signature))
        {
            return std::nullopt;
        }
        if (!collectNextKey(g.granter, granter->permanentKey,
                            g.granterNextKey))
        {
            return std::nullopt;
        }
        return g.granter;
    }
};

} // namespace

std::optional<ReconfigPlan>
validateReconfigBatch(View const& currentView,
                      std::vector<Transaction> const& txs,
                      std::map<ClientId, std::uint64_t> const& lastExecutedSeq)
{
    if (txs.empty())
    {
        return std::nullopt;
    }

    Composer c;
    c.currentViewId = currentView.id;
    c.nextViewId = currentView.id + 1;
    for (auto const& m : currentView.members)
    {
        c.members.push_back({m.id, m.permanentKey});
    }

    ReconfigPlan plan;
    plan.txAccepted.assign(txs.size(), false);

    // The first change in the batch is measured against the installed view's
    // declared fault bound; later changes within the same batch recompute
    // the bound from the intermediate membership.
    std::uint32_t firstThreshold = currentView.n() - currentView.f;
    bool first = true;

    for (std::size_t i = 0; i < txs.size(); ++i)
    {
        auto const& tx = txs[i];
        if (tx.kind != TxKind::RECONFIGURATION)
        {
            return std::nullopt; // mixed batches are malformed outright
        }
        auto seen = lastExecutedSeq.find(tx.client);
        bool stale = seen != lastExecutedSeq.end() &&
                     tx.sequence <= seen->second;
        for (std::size_t j = 0; !stale && j < i; ++j)
        {
            stale = txs[j].client == tx.client &&
                    txs[j].sequence >= tx.sequence;
        }
        if (stale)
        {
            continue; // replay or regression; recorded as duplicate rejection
        }
        ReconfigRequest req;
        try
        {
            req = decodeFromBytes<ReconfigRequest>(tx.payload);
        }
        catch (CodecError const&)
        {
            continue; // recorded as rejected
        }
        if (req.viewId != c.currentViewId)
        {
            continue; // stale request from an earlier view
        }
        std::uint32_t need = first ? firstThreshold : c.threshold();

        switch (req.kind)
        {
        case ReconfigKind::JOIN:
        {
            if (tx.client != req.subject || c.find(req.subject))
            {
                break;
            }
            if (!req.issuerNextKey)
            {
                break;
            }
            if (!crypto::verify(req.subjectPermanentKey,
                                req.signingDigest(tx.client, tx.sequence),
                                req.signature))
            {
                break;
            }
            Composer trial = c;
            if (!trial.collectNextKey(req.subject, req.subjectPermanentKey,
                                      *req.issuerNextKey))
            {
                break;
            }
            std::set<ReplicaId> granters;
            for (auto const& g : req.grants)
            {
                if (auto id = trial.checkGrant(g, GrantPurpose::JOIN,
                                               req.subject,
                                               req.subjectPermanentKey))
                {
                    granters.insert(*id);
                }
            }
            if (granters.size() < need)
            {
                break;
            }
            trial.members.push_back({req.subject, req.subjectPermanentKey});
            c = std::move(trial);
            c.changed = true;
            first = false;
            plan.txAccepted[i] = true;
            break;
        }
        case ReconfigKind::LEAVE:
        {
            auto const* subject = c.find(req.subject);
            if (!subject || tx.client != req.subject)
            {
                break;
            }
            if (!crypto::verify(subject->permanentKey,
                                req.signingDigest(tx.client, tx.sequence),
                                req.signature))
            {
                break;
            }
            Composer trial = c;
            std::set<ReplicaId> granters;
            for (auto const& g : req.grants)
            {
                if (auto id = trial.checkGrant(g, GrantPurpose::LEAVE,
                                               req.subject,
                                               subject->permanentKey))
                {
                    granters.insert(*id);
                }
            }
            // The leaver's grant never counts toward the threshold; with it
            // excluded, every counted grant contributes a surviving member's
            // fresh key, which is what keeps the new view's key count at or
            // above newView.n − newView.f.
            if (granters.size() < need)
            {
                break;
            }
            trial.members.erase(
                std::remove_if(trial.members.begin(), trial.members.end(),
                               [&](auto const& m) {
                                   return m.id == req.subject;
                               }),
                trial.members.end());
            trial.nextKeys.erase(req.subject);
            c = std::move(trial);
            c.changed = true;
            first = false;
            plan.txAccepted[i] = true;
            break;
        }
        case ReconfigKind::REMOVE:
        {
            auto const* voter = c.find(tx.client);
            auto const* target = c.find(req.subject);
            if (!voter || !target || tx.client == req.subject)
            {
                break;
            }
            if (req.subjectPermanentKey != target->permanentKey)
            {
                break;
            }
            if (!req.issuerNextKey)
            {
                break;
            }
            if (!crypto::verify(voter->permanentKey,
                                req.signingDigest(tx.client, tx.sequence),
                                req.signature))
            {
                break;
            }
            if (!c.collectNextKey(tx.client, voter->permanentKey,
                                  *req.issuerNextKey))
            {
                break;
            }
            auto& votes = c.removeVotes[req.subject];
            if (!votes.insert(tx.client).second)
            {
                break; // duplicate vote from the same member
            }
            plan.txAccepted[i] = true;
            if (votes.size() >= need)
            {
                c.members.erase(
                    std::remove_if(c.members.begin(), c.members.end(),
                                   [&](auto const& m) {
                                       return m.id == req.subject;
                                   }),
                    c.members.end());
                c.nextKeys.erase(req.subject);
                c.removeVotes.erase(req.subject);
                c.changed = true;
                first = false;
            }
            break;
        }
        }
    }

    if (!c.changed || c.members.empty())
    {
        return std::nullopt;
    }

    // Sub-threshold remove votes that never triggered are rejected results.
    for (auto const& [target, voters] : c.removeVotes)
    {
        for (std::size_t i = 0; i < txs.size(); ++i)
        {
            if (!plan.txAccepted[i])
            {
                continue;
            }
            try
            {
                auto req = decodeFromBytes<ReconfigRequest>(txs[i].payload);
                if (req.kind == ReconfigKind::REMOVE && req.subject == target)
                {
                    plan.txAccepted[i] = false;
                }
            }
            catch (CodecError const&)
            {
            }
        }
    }

    View nv;
    nv.id = c.nextViewId;
    nv.f = View::maxFaulty(static_cast<std::uint32_t>(c.members.size()));
    for (auto const& m : c.members)
    {
        ViewMember vm;
        vm.id = m.id;
        vm.permanentKey = m.permanentKey;
        auto it = c.nextKeys.find(m.id);
        if (it != c.nextKeys.end())
        {
            vm.consensusKey = it->second;
        }
        nv.members.push_back(std::move(vm));
    }

    // Dissemination bound: the block must carry at least n − f of the new
    // view's consensus keys, or late-key dissemination could leave verifiers
    // unable to assemble any quorum.
    if (nv.consensusKeyCount() < nv.n() - nv.f)
    {
        return std::nullopt;
    }
    if (nv.validate())
    {
        return std::nullopt;
    }

    plan.newView = std::move(nv);
    return plan;
}

} // namespace bftchain::reconfig
