// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftchain/codec.hpp"

#include "doctest.h"

using namespace bftchain;

TEST_CASE("integers encode big-endian at fixed width")
{
    Encoder e;
    e.u8(0xab);
    e.u32(0x01020304u);
    e.u64(0x1122334455667788ull);
    e.i64(-1);
    Bytes expected = {
        0xab,                                           // u8
        0x01, 0x02, 0x03, 0x04,                         // u32
        0x11, 0x22, 0x33, 0x44, 0x55, 0x66, 0x77, 0x88, // u64
        0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, // i64(-1)
    };
    CHECK(e.data() == expected);
}

TEST_CASE("byte strings carry a u32 length prefix")
{
    Encoder e;
    e.bytes(Bytes{0xde, 0xad});
    e.str("ok");
    Bytes expected = {0x00, 0x00, 0x00, 0x02, 0xde, 0xad,
                      0x00, 0x00, 0x00, 0x02, 'o',  'k'};
    CHECK(e.data() == expected);
}

TEST_CASE("decoder round-trips every encoder form")
{
    Encoder e;
    e.u8(7);
    e.u32(123456);
    e.u64(0xffffffffffffffffull);
    e.i64(-42);
    e.bytes(Bytes{1, 2, 3});
    e.str("hello");
    std::optional<std::uint8_t> none;
    e.u8(0); // hand-rolled empty optional flag
    auto buf = e.data();

    Decoder d(buf);
    CHECK(d.u8() == 7);
    CHECK(d.u32() == 123456);
    CHECK(d.u64() == 0xffffffffffffffffull);
    CHECK(d.i64() == -42);
    CHECK(d.bytes() == Bytes{1, 2, 3});
    CHECK(d.str() == "hello");
    CHECK(d.u8() == 0);
    CHECK(d.done());
}

TEST_CASE("decoding past the end throws")
{
    Bytes three = {1, 2, 3};
    Decoder d(three);
    CHECK_THROWS_AS(d.u32(), CodecError);
}

TEST_CASE("length prefix larger than the input throws")
{
    Encoder e;
    e.u32(1000); // claims 1000 bytes follow
    e.u8(1);
    Decoder d(e.data());
    CHECK_THROWS_AS(d.bytes(), CodecError);
}

TEST_CASE("wild list counts are rejected before allocation")
{
    struct Item
    {
        std::uint8_t v;
        static Item
        decodeFrom(Decoder& d)
        {
            return Item{d.u8()};
        }
    };
    Encoder e;
    e.u32(0xffffffffu);
    Decoder d(e.data());
    CHECK_THROWS_AS(d.list<Item>(), CodecError);
}

TEST_CASE("optional flag must be zero or one")
{
    struct Item
    {
        std::uint8_t v;
        static Item
        decodeFrom(Decoder& d)
        {
            return Item{d.u8()};
        }
    };
    Bytes bad = {0x02, 0x01};
    Decoder d(bad);
    CHECK_THROWS_AS(d.opt<Item>(), CodecError);
}

TEST_CASE("identical values encode to identical bytes")
{
    auto encodeOnce = [] {
        Encoder e;
        e.u64(99);
        e.str("payload");
        e.bytes(Bytes(300, 0x5a));
        return e.data();
    };
    CHECK(encodeOnce() == encodeOnce());
}
