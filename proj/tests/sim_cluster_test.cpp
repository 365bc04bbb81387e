// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftchain/sim/simworld.hpp"

#include "doctest.h"

using namespace bftchain;
using namespace bftchain::sim;

namespace
{

SimConfig
smallCluster(std::uint64_t seed, std::uint32_t replicas,
             std::uint32_t clients)
{
    SimConfig cfg;
    cfg.seed = seed;
    cfg.replicas = replicas;
    cfg.clients = clients;
    return cfg;
}

void
requireConverged(SimResult const& result, std::uint32_t replicas)
{
    REQUIRE(result.ok());
    std::optional<crypto::Digest> digest;
    std::optional<std::int64_t> complete;
    for (std::uint32_t id = 1; id <= replicas; ++id)
    {
        auto const& out = result.replicas.at(id);
        REQUIRE(out.running);
        CHECK(out.mode == ReplicaMode::ACTIVE);
        CHECK(out.ledgerFullyValid);
        if (!digest)
        {
            digest = out.stateDigest;
            complete = out.ledgerLastComplete;
        }
        else
        {
            CHECK(*digest == out.stateDigest);
            CHECK(*complete == out.ledgerLastComplete);
        }
    }
}

} // namespace

TEST_CASE("four replicas mint and spend to completion")
{
    auto cfg = smallCluster(7, 4, 2);
    SimWorld world(cfg);
    world.clientLoad(0, 5, true);
    world.clientLoad(1, 5, true);
    auto result = world.run(20'000'000);

    requireConverged(result, 4);
    for (auto const& [id, client] : result.clients)
    {
        CHECK(client.done);
        CHECK(client.okMints == 5);
        CHECK(client.okSpends == 5);
        CHECK(client.rejected == 0);
        CHECK(client.committed == client.submitted);
    }
    CHECK(result.committedOps == 20);
}

TEST_CASE("identical seeds produce identical executions")
{
    auto runOnce = [] {
        auto cfg = smallCluster(42, 4, 1);
        cfg.trace = true;
        SimWorld world(cfg);
        world.clientLoad(0, 3, true);
        auto result = world.run(10'000'000);
        REQUIRE(result.ok());
        return std::make_tuple(world.traceLog(), world.ledgerBytes(1),
                               result.deliveredMessages);
    };
    auto a = runOnce();
    auto b = runOnce();
    CHECK(std::get<0>(a) == std::get<0>(b));
    CHECK(std::get<1>(a) == std::get<1>(b));
    CHECK(std::get<2>(a) == std::get<2>(b));
}

TEST_CASE("progress with one of four replicas crashed")
{
    auto cfg = smallCluster(11, 4, 1);
    SimWorld world(cfg);
    world.at(100'000, [&] { world.crash(3); });
    world.clientLoad(0, 4, true);
    auto result = world.run(30'000'000);

    REQUIRE(result.ok());
    auto const& client = result.clients.at(SimWorld::CLIENT_BASE);
    CHECK(client.done);
    CHECK(client.okMints == 4);
    CHECK(client.okSpends == 4);
    CHECK_FALSE(result.replicas.at(3).running);
}

TEST_CASE("no progress with two of four crashed until one recovers")
{
    auto cfg = smallCluster(13, 4, 1);
    SimWorld world(cfg);
    world.crash(3);
    world.crash(4);
    world.clientLoad(0, 2, false);
    auto mid = world.run(5'000'000);
    CHECK(mid.committedOps == 0);

    world.recover(4);
    auto result = world.run(40'000'000);
    REQUIRE(result.ok());
    auto const& client = result.clients.at(SimWorld::CLIENT_BASE);
    CHECK(client.okMints == 2);
    CHECK(result.replicas.at(4).mode == ReplicaMode::ACTIVE);
    CHECK(result.replicas.at(4).ledgerFullyValid);
}

TEST_CASE("crashed replica recovers and converges to the others")
{
    auto cfg = smallCluster(17, 4, 2);
    SimWorld world(cfg);
    world.clientLoad(0, 6, true);
    world.clientLoad(1, 6, true);
    world.at(400'000, [&] { world.crash(2); });
    world.at(3'000'000, [&] { world.recover(2); });
    auto result = world.run(40'000'000);

    requireConverged(result, 4);
    CHECK(result.committedOps == 24);
}
