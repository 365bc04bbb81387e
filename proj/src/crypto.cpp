// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftchain/crypto.hpp"

#include <sodium.h>

#include <mutex>
#include <stdexcept>

namespace bftchain
{

std::string
toHex(ByteSpan data)
{
    static char const* digits = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (auto b : data)
    {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0f]);
    }
    return out;
}

Bytes
fromHex(std::string_view hex)
{
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9')
            return c - '0';
        if (c >= 'a' && c <= 'f')
            return c - 'a' + 10;
        if (c >= 'A' && c <= 'F')
            return c - 'A' + 10;
        return -1;
    };
    if (hex.size() % 2 != 0)
    {
        throw std::invalid_argument("odd-length hex string");
    }
    Bytes out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2)
    {
        int hi = nibble(hex[i]);
        int lo = nibble(hex[i + 1]);
        if (hi < 0 || lo < 0)
        {
            throw std::invalid_argument("bad hex digit");
        }
        out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
    }
    return out;
}

} // namespace bftchain

namespace bftchain::crypto
{

void
initCrypto()
{
    static std::once_flag flag;
    std::call_once(flag, [] {
        if (sodium_init() < 0)
        {
            throw std::runtime_error("crypto library initialization failed");
        }
    });
}

Hasher::Hasher()
{
    initCrypto();
    static_assert(sizeof(crypto_hash_sha256_state) <= sizeof(mState));
    crypto_hash_sha256_init(
        reinterpret_cast<crypto_hash_sha256_state*>(mState.data()));
}

void
Hasher::update(ByteSpan data)
{
    if (mDone)
    {
        throw std::logic_error("hasher already finished");
    }
    crypto_hash_sha256_update(
        reinterpret_cast<crypto_hash_sha256_state*>(mState.data()),
        data.data(), data.size());
}

Digest
Hasher::finish()
{
    if (mDone)
    {
        throw std::logic_error("hasher already finished");
    }
    mDone = true;
    Digest out;
    crypto_hash_sha256_final(
        reinterpret_cast<crypto_hash_sha256_state*>(mState.data()),
        out.bytes.data());
    return out;
}

Digest
sha256(ByteSpan data)
{
    Hasher h;
    h.update(data);
    return h.finish();
}

Digest
emptyDigest()
{
    return sha256(ByteSpan{});
}

SecretKey::~SecretKey()
{
    wipe();
}

SecretKey::SecretKey(SecretKey&& other) noexcept
    : mBytes(other.mBytes), mPresent(other.mPresent)
{
    other.wipe();
}

SecretKey&
SecretKey::operator=(SecretKey&& other) noexcept
{
    if (this != &other)
    {
        wipe();
        mBytes = other.mBytes;
        mPresent = other.mPresent;
        other.wipe();
    }
    return *this;
}

SecretKey
SecretKey::fromSpan(ByteSpan data)
{
    if (data.size() != SIZE)
    {
        throw CodecError("secret key has wrong length");
    }
    SecretKey out;
    std::memcpy(out.mBytes.data(), data.data(), SIZE);
    out.mPresent = true;
    return out;
}

void
SecretKey::wipe()
{
    sodium_memzero(mBytes.data(), mBytes.size());
    mPresent = false;
}

SecretKey
SecretKey::clone() const
{
    if (!mPresent)
    {
        return SecretKey{};
    }
    return fromSpan(span());
}

Signature
sign(SecretKey const& key, Digest const& message)
{
    if (key.empty())
    {
        throw KeyForgottenError();
    }
    initCrypto();
    Signature sig;
    crypto_sign_detached(sig.bytes.data(), nullptr, message.bytes.data(),
                         message.bytes.size(), key.span().data());
    return sig;
}

bool
verify(PublicKey const& key, Digest const& message, Signature const& sig)
{
    initCrypto();
    return crypto_sign_verify_detached(sig.bytes.data(), message.bytes.data(),
                                       message.bytes.size(),
                                       key.bytes.data()) == 0;
}

PermanentKeypair
PermanentKeypair::generate(ProcessId owner)
{
    initCrypto();
    PermanentKeypair kp;
    kp.owner = owner;
    std::array<std::uint8_t, crypto_sign_SECRETKEYBYTES> sk;
    crypto_sign_keypair(kp.publicKey.bytes.data(), sk.data());
    kp.secretKey = SecretKey::fromSpan(ByteSpan(sk.data(), sk.size()));
    sodium_memzero(sk.data(), sk.size());
    return kp;
}

PermanentKeypair
PermanentKeypair::fromSeed(ProcessId owner,
                           std::array<std::uint8_t, 32> const& seed)
{
    initCrypto();
    PermanentKeypair kp;
    kp.owner = owner;
    std::array<std::uint8_t, crypto_sign_SECRETKEYBYTES> sk;
    crypto_sign_seed_keypair(kp.publicKey.bytes.data(), sk.data(),
                             seed.data());
    kp.secretKey = SecretKey::fromSpan(ByteSpan(sk.data(), sk.size()));
    sodium_memzero(sk.data(), sk.size());
    return kp;
}

Digest
endorsementDigest(ProcessId owner, ViewId viewId, PublicKey const& key)
{
    Encoder e;
    e.str("key-endorsement");
    e.u32(owner);
    e.u64(viewId);
    e.obj(key);
    return sha256(e.data());
}

bool
EndorsedKey::endorsementValidUnder(PublicKey const& permanentKey) const
{
    return verify(permanentKey, endorsementDigest(owner, viewId, publicKey),
                  endorsement);
}

namespace
{

ConsensusKeypair
finishConsensusKeypair(PermanentKeypair const& endorser, ViewId viewId,
                       PublicKey pub, SecretKey sec)
{
    EndorsedKey ek;
    ek.owner = endorser.owner;
    ek.viewId = viewId;
    ek.publicKey = pub;
    ek.endorsement =
        endorser.sign(endorsementDigest(endorser.owner, viewId, pub));
    return ConsensusKeypair::fromParts(std::move(ek), std::move(sec));
}

} // namespace

ConsensusKeypair
ConsensusKeypair::generate(PermanentKeypair const& endorser, ViewId viewId)
{
    initCrypto();
    PublicKey pub;
    std::array<std::uint8_t, crypto_sign_SECRETKEYBYTES> sk;
    crypto_sign_keypair(pub.bytes.data(), sk.data());
    auto sec = SecretKey::fromSpan(ByteSpan(sk.data(), sk.size()));
    sodium_memzero(sk.data(), sk.size());
    return finishConsensusKeypair(endorser, viewId, pub, std::move(sec));
}

ConsensusKeypair
ConsensusKeypair::fromSeed(PermanentKeypair const& endorser, ViewId viewId,
                           std::array<std::uint8_t, 32> const& seed)
{
    initCrypto();
    PublicKey pub;
    std::array<std::uint8_t, crypto_sign_SECRETKEYBYTES> sk;
    crypto_sign_seed_keypair(pub.bytes.data(), sk.data(), seed.data());
    auto sec = SecretKey::fromSpan(ByteSpan(sk.data(), sk.size()));
    sodium_memzero(sk.data(), sk.size());
    return finishConsensusKeypair(endorser, viewId, pub, std::move(sec));
}

ConsensusKeypair
ConsensusKeypair::fromParts(EndorsedKey endorsed, SecretKey secret)
{
    ConsensusKeypair kp;
    kp.mEndorsed = std::move(endorsed);
    kp.mSecret = std::move(secret);
    kp.mForgotten = kp.mSecret.empty();
    return kp;
}

void
ConsensusKeypair::forget()
{
    mSecret.wipe();
    mForgotten = true;
}

Signature
ConsensusKeypair::sign(Digest const& message) const
{
    if (mForgotten)
    {
        throw KeyForgottenError();
    }
    return crypto::sign(mSecret, message);
}

} // namespace bftchain::crypto
