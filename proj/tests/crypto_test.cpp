// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftchain/crypto.hpp"

#include "doctest.h"

#include <algorithm>

using namespace bftchain;
using namespace bftchain::crypto;

namespace
{

std::array<std::uint8_t, 32>
fixedSeed(std::uint8_t fill)
{
    std::array<std::uint8_t, 32> seed{};
    seed.fill(fill);
    return seed;
}

} // namespace

TEST_CASE("sha256 matches the published test vectors")
{
    initCrypto();
    // Independent oracles: FIPS 180-2 example digests.
    CHECK(emptyDigest().hex() ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    Bytes abc = {'a', 'b', 'c'};
    CHECK(sha256(abc).hex() ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("incremental hashing equals one-shot hashing")
{
    initCrypto();
    Bytes data(1000);
    for (std::size_t i = 0; i < data.size(); ++i)
    {
        data[i] = static_cast<std::uint8_t>(i * 7);
    }
    Hasher h;
    h.update(ByteSpan(data.data(), 100));
    h.update(ByteSpan(data.data() + 100, 900));
    CHECK(h.finish() == sha256(data));
}

TEST_CASE("signature round trip and tamper rejection")
{
    initCrypto();
    auto kp = PermanentKeypair::generate(1);
    auto msg = sha256(Bytes{1, 2, 3});
    auto sig = kp.sign(msg);
    CHECK(verify(kp.publicKey, msg, sig));

    auto other = msg;
    other.bytes[0] ^= 1;
    CHECK_FALSE(verify(kp.publicKey, other, sig));

    auto badSig = sig;
    badSig.bytes[63] ^= 1;
    CHECK_FALSE(verify(kp.publicKey, msg, badSig));

    auto stranger = PermanentKeypair::generate(2);
    CHECK_FALSE(verify(stranger.publicKey, msg, sig));
}

TEST_CASE("seeded keypairs are deterministic, generated ones fresh")
{
    initCrypto();
    auto a = PermanentKeypair::fromSeed(5, fixedSeed(1));
    auto b = PermanentKeypair::fromSeed(5, fixedSeed(1));
    auto c = PermanentKeypair::fromSeed(5, fixedSeed(2));
    CHECK(a.publicKey == b.publicKey);
    CHECK_FALSE(a.publicKey == c.publicKey);

    auto g1 = PermanentKeypair::generate(5);
    auto g2 = PermanentKeypair::generate(5);
    CHECK_FALSE(g1.publicKey == g2.publicKey);
}

TEST_CASE("consensus keys carry a valid endorsement for their view")
{
    initCrypto();
    auto owner = PermanentKeypair::generate(3);
    auto ck = ConsensusKeypair::generate(owner, 9);
    auto endorsed = ck.endorsed();
    CHECK(endorsed.owner == 3);
    CHECK(endorsed.viewId == 9);
    CHECK(endorsed.endorsementValidUnder(owner.publicKey));

    auto impostor = PermanentKeypair::generate(4);
    CHECK_FALSE(endorsed.endorsementValidUnder(impostor.publicKey));

    SUBCASE("endorsement binds every field")
    {
        auto k = endorsed;
        k.viewId = 10;
        CHECK_FALSE(k.endorsementValidUnder(owner.publicKey));
        k = endorsed;
        k.owner = 5;
        CHECK_FALSE(k.endorsementValidUnder(owner.publicKey));
        k = endorsed;
        k.publicKey.bytes[0] ^= 1;
        CHECK_FALSE(k.endorsementValidUnder(owner.publicKey));
    }
}

TEST_CASE("distinct invocations yield distinct consensus keys")
{
    initCrypto();
    auto owner = PermanentKeypair::generate(3);
    auto k1 = ConsensusKeypair::generate(owner, 0);
    auto k2 = ConsensusKeypair::generate(owner, 0);
    CHECK_FALSE(k1.endorsed().publicKey == k2.endorsed().publicKey);
}

TEST_CASE("forgetting a consensus key makes signing impossible")
{
    initCrypto();
    auto owner = PermanentKeypair::generate(7);
    auto ck = ConsensusKeypair::generate(owner, 0);
    auto msg = sha256(Bytes{9});
    auto sig = ck.sign(msg);
    CHECK(verify(ck.endorsed().publicKey, msg, sig));

    ck.forget();
    CHECK(ck.forgotten());
    CHECK_THROWS_AS(ck.sign(msg), KeyForgottenError);
    // Idempotent: a second forget is harmless.
    ck.forget();
    CHECK(ck.forgotten());
    // Verification needs only the public half and must keep working.
    CHECK(verify(ck.endorsed().publicKey, msg, sig));
}

TEST_CASE("a forgotten key leaves no secret bytes behind")
{
    initCrypto();
    auto sk = SecretKey::fromSpan(Bytes(SecretKey::SIZE, 0x42));
    CHECK_FALSE(sk.empty());
    sk.wipe();
    CHECK(sk.empty());
    auto span = sk.span();
    CHECK(std::all_of(span.begin(), span.end(),
                      [](std::uint8_t b) { return b == 0; }));
}

TEST_CASE("secret key clones are independent")
{
    initCrypto();
    auto sk = SecretKey::fromSpan(Bytes(SecretKey::SIZE, 0x17));
    auto copy = sk.clone();
    sk.wipe();
    CHECK(copy.span()[0] == 0x17);
}

TEST_CASE("fixed byte fields reject wrong lengths")
{
    Bytes tooShort(31, 0);
    CHECK_THROWS_AS(Digest::fromSpan(tooShort), CodecError);
    Bytes right(32, 0xaa);
    auto d = Digest::fromSpan(right);
    CHECK(d.hex() == std::string(64, 'a'));
}

TEST_CASE("consensus keypairs rebuilt from parts sign identically")
{
    initCrypto();
    auto owner = PermanentKeypair::generate(2);
    auto ck = ConsensusKeypair::fromSeed(owner, 4, fixedSeed(9));
    auto rebuilt =
        ConsensusKeypair::fromParts(ck.endorsed(), ck.secret().clone());
    auto msg = sha256(Bytes{1});
    CHECK(rebuilt.endorsed() == ck.endorsed());
    CHECK(verify(ck.endorsed().publicKey, msg, rebuilt.sign(msg)));
}
