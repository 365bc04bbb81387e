// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftchain/view.hpp"

#include "doctest.h"

#include <map>

using namespace bftchain;

namespace
{

struct MemberKit
{
    crypto::PermanentKeypair perm;
    crypto::ConsensusKeypair consensus;
};

MemberKit
makeMember(ReplicaId id, ViewId viewId)
{
    std::array<std::uint8_t, 32> seed{};
    seed[0] = static_cast<std::uint8_t>(id);
    seed[1] = static_cast<std::uint8_t>(viewId);
    auto perm = crypto::PermanentKeypair::fromSeed(id, seed);
    seed[2] = 1;
    auto ck = crypto::ConsensusKeypair::fromSeed(perm, viewId, seed);
    return MemberKit{std::move(perm), std::move(ck)};
}

View
makeView(ViewId viewId, std::uint32_t n)
{
    View v;
    v.id = viewId;
    v.f = View::maxFaulty(n);
    for (std::uint32_t i = 1; i <= n; ++i)
    {
        auto kit = makeMember(i, viewId);
        ViewMember m;
        m.id = i;
        m.permanentKey = kit.perm.publicKey;
        m.consensusKey = kit.consensus.endorsed();
        v.members.push_back(std::move(m));
    }
    return v;
}

} // namespace

TEST_CASE("fault bound and quorum follow the frozen table")
{
    crypto::initCrypto();
    // Independently computed values of f = (n-1)/3 and q = ceil((n+f+1)/2).
    std::map<std::uint32_t, std::pair<std::uint32_t, std::uint32_t>> expect =
        {{1, {0, 1}}, {2, {0, 2}},  {3, {0, 2}}, {4, {1, 3}},
         {5, {1, 4}}, {6, {1, 4}},  {7, {2, 5}}, {8, {2, 6}},
         {9, {2, 6}}, {10, {3, 7}}, {13, {4, 9}}};
    for (auto const& [n, fq] : expect)
    {
        CHECK(View::maxFaulty(n) == fq.first);
        auto v = makeView(0, n);
        CHECK(v.n() == n);
        CHECK(v.f == fq.first);
        CHECK(v.quorum() == fq.second);
    }
}

TEST_CASE("any two quorums intersect in more replicas than can be faulty")
{
    crypto::initCrypto();
    for (std::uint32_t n = 4; n <= 10; ++n)
    {
        for (std::uint32_t f = 0; f <= View::maxFaulty(n); ++f)
        {
            View v = makeView(0, n);
            v.f = f;
            auto q = v.quorum();
            // Two quorums overlap in at least 2q - n members; safety needs
            // that overlap to contain at least one correct replica beyond
            // any f faulty ones.
            CHECK(2 * q - n >= f + 1);
            CHECK(q >= 2 * f + 1);
            CHECK(q <= n);
        }
    }
}

TEST_CASE("a well-formed view validates")
{
    crypto::initCrypto();
    for (std::uint32_t n : {4u, 7u, 10u})
    {
        auto v = makeView(2, n);
        CHECK_FALSE(v.validate().has_value());
    }
}

TEST_CASE("structural defects are each rejected")
{
    crypto::initCrypto();
    auto v = makeView(1, 4);

    SUBCASE("no members")
    {
        v.members.clear();
        CHECK(v.validate().has_value());
    }
    SUBCASE("fault bound too high for the size")
    {
        v.f = 2; // 4 members tolerate at most 1
        CHECK(v.validate().has_value());
    }
    SUBCASE("duplicate member ids")
    {
        v.members[1].id = v.members[0].id;
        CHECK(v.validate().has_value());
    }
    SUBCASE("consensus key endorsed for a different view")
    {
        auto kit = makeMember(v.members[0].id, 9);
        v.members[0].consensusKey = kit.consensus.endorsed();
        CHECK(v.validate().has_value());
    }
    SUBCASE("consensus key owned by someone else")
    {
        v.members[0].consensusKey = v.members[1].consensusKey;
        CHECK(v.validate().has_value());
    }
    SUBCASE("endorsement not by the member's permanent key")
    {
        auto impostor = makeMember(99, 1);
        auto ck = crypto::ConsensusKeypair::generate(impostor.perm, 1);
        auto endorsed = ck.endorsed();
        endorsed.owner = v.members[0].id; // claim the slot, wrong signer
        v.members[0].consensusKey = endorsed;
        CHECK(v.validate().has_value());
    }
    SUBCASE("a member may lack a consensus key entirely")
    {
        v.members[0].consensusKey.reset();
        CHECK_FALSE(v.validate().has_value());
        CHECK(v.consensusKeyCount() == 3);
    }
}

TEST_CASE("view digest commits to every field")
{
    crypto::initCrypto();
    auto v = makeView(3, 4);
    auto base = v.digest();

    auto w = v;
    w.id = 4;
    CHECK_FALSE(w.digest() == base);

    w = v;
    w.f = 0;
    CHECK_FALSE(w.digest() == base);

    w = v;
    w.members.pop_back();
    CHECK_FALSE(w.digest() == base);

    w = v;
    w.members[0].permanentKey.bytes[5] ^= 1;
    CHECK_FALSE(w.digest() == base);
}

TEST_CASE("views survive the codec round trip")
{
    crypto::initCrypto();
    auto v = makeView(5, 7);
    v.members[2].consensusKey.reset();
    auto decoded = decodeFromBytes<View>(encodeToBytes(v));
    CHECK(decoded == v);
    CHECK(decoded.digest() == v.digest());
}

TEST_CASE("member lookup is by id not by position")
{
    crypto::initCrypto();
    auto v = makeView(0, 4);
    CHECK(v.contains(3));
    CHECK_FALSE(v.contains(99));
    CHECK(v.indexOf(1) == 0);
    CHECK(v.indexOf(4) == 3);
    CHECK_FALSE(v.indexOf(5).has_value());
    REQUIRE(v.member(2) != nullptr);
    CHECK(v.member(2)->id == 2);
    CHECK(v.member(42) == nullptr);
}

TEST_CASE("the key directory resolves recorded and late keys")
{
    crypto::initCrypto();
    auto v0 = makeView(0, 4);
    KeyDirectory dir;
    dir.addView(v0);

    auto recorded = dir.resolve(0, 1);
    REQUIRE(recorded.has_value());
    CHECK(*recorded == v0.members[0].consensusKey->publicKey);
    CHECK_FALSE(dir.resolve(0, 99).has_value());
    CHECK_FALSE(dir.resolve(7, 1).has_value());

    SUBCASE("late keys are admitted only with a valid endorsement")
    {
        auto v1 = makeView(1, 4);
        v1.members[0].consensusKey.reset();
        v1.members[1].consensusKey.reset();
        dir.addView(v1);
        CHECK_FALSE(dir.resolve(1, 1).has_value());

        auto kit = makeMember(1, 1); // same permanent seed as the view used
        auto late = crypto::ConsensusKeypair::generate(kit.perm, 1);
        CHECK(dir.tryAdmit(late.endorsed()));
        auto resolved = dir.resolve(1, 1);
        REQUIRE(resolved.has_value());
        CHECK(*resolved == late.endorsed().publicKey);

        // A key endorsed by a non-member permanent key is refused.
        auto outsider = crypto::PermanentKeypair::generate(55);
        auto bogus = crypto::ConsensusKeypair::generate(outsider, 1);
        auto claim = bogus.endorsed();
        claim.owner = 2; // pretends to fill member 2's slot
        CHECK_FALSE(dir.tryAdmit(claim));
        CHECK_FALSE(dir.resolve(1, 2).has_value());
    }
}
