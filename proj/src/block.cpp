// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftchain/block.hpp"

#include <set>

namespace bftchain
{

crypto::Digest
writeVoteDigest(ViewId view, InstanceId instance, std::uint32_t round,
                crypto::Digest const& batchHash)
{
    Encoder e;
    e.str("write-vote");
    e.u64(view);
    e.u64(instance);
    e.u32(round);
    e.obj(batchHash);
    return crypto::sha256(e.data());
}

crypto::Digest
acceptVoteDigest(ViewId view, InstanceId instance,
                 crypto::Digest const& batchHash)
{
    Encoder e;
    e.str("accept-vote");
    e.u64(view);
    e.u64(instance);
    e.obj(batchHash);
    return crypto::sha256(e.data());
}

// Shared vote-counting core for proofs, certificates and round-change locks.
std::uint32_t
countValidVotes(std::vector<SignedVote> const& votes,
                crypto::Digest const& statement, View const& view,
                KeyDirectory& keys)
{
    std::set<ReplicaId> counted;
    for (auto const& vote : votes)
    {
        if (counted.count(vote.voter))
        {
            continue;
        }
        if (!view.contains(vote.voter))
        {
            continue;
        }
        if (vote.lateKey)
        {
            keys.tryAdmit(*vote.lateKey);
        }
        auto key = keys.resolve(view.id, vote.voter);
        if (!key)
        {
            continue;
        }
        if (crypto::verify(*key, statement, vote.signature))
        {
            counted.insert(vote.voter);
        }
    }
    return static_cast<std::uint32_t>(counted.size());
}

bool
verifyDecisionProof(ConsensusProof const& proof, View const& view,
                    KeyDirectory& keys)
{
    auto statement = acceptVoteDigest(view.id, proof.instance, proof.batchHash);
    return countValidVotes(proof.votes, statement, view, keys) >=
           view.quorum();
}

bool
verifyCertificate(Certificate const& cert, crypto::Digest const& headerHash,
                  View const& view, KeyDirectory& keys)
{
    return countValidVotes(cert.votes, headerHash, view, keys) >=
           view.quorum();
}

char const*
nameOf(PersistenceVariant v)
{
    switch (v)
    {
    case PersistenceVariant::STRONG:
        return "strong";
    case PersistenceVariant::WEAK:
        return "weak";
    case PersistenceVariant::LAMBDA:
        return "lambda";
    case PersistenceVariant::MEMORY:
        return "memory";
    }
    return "unknown";
}

std::optional<PersistenceVariant>
persistenceVariantFromString(std::string_view s)
{
    if (s == "strong")
        return PersistenceVariant::STRONG;
    if (s == "weak")
        return PersistenceVariant::WEAK;
    if (s == "lambda")
        return PersistenceVariant::LAMBDA;
    if (s == "memory")
        return PersistenceVariant::MEMORY;
    return std::nullopt;
}

std::optional<std::string>
GenesisBlock::validate() const
{
    if (initialView.id != 0)
    {
        return "initial view id must be 0";
    }
    if (auto err = initialView.validate())
    {
        return err;
    }
    if (initialView.consensusKeyCount() != initialView.n())
    {
        return "initial view must carry a consensus key for every member";
    }
    if (checkpointPeriod == 0)
    {
        return "checkpoint period must be positive";
    }
    return std::nullopt;
}

} // namespace bftchain
