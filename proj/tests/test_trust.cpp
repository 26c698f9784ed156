#include <gtest/gtest.h>

#include "sentinel/trust.hpp"
#include "support.hpp"

using namespace sentinel;
using sentinel::testing::PayloadGen;

namespace {

const PermissionSet kVehicle{Permission::sendCam, Permission::sendCpm, Permission::sendDenm};

struct Pki {
    CertificateAuthority root{KeyPair::derive(1, "root")};
    CertificateAuthority pca{KeyPair::derive(1, "pca"),
                             root.issue({0xFFFF0001}, KeyPair::derive(1, "pca").publicKey(), PermissionSet::all())};

    Hsm station(std::uint32_t id, PermissionSet perms) const {
        auto keys = KeyPair::derive(1, "station-" + std::to_string(id));
        auto cert = pca.issue({id}, keys.publicKey(), perms);
        return Hsm(keys, cert, pca.certificate());
    }
};

}  // namespace

TEST(Trust, SignVerifyRoundTripRandomPayloads) {
    Pki pki;
    const auto hsm = pki.station(10, PermissionSet::all());
    PayloadGen gen(7);
    for (int i = 0; i < 10000; ++i) {
        const auto msg = hsm.sign(encode(gen.any()));
        ASSERT_EQ(verify(msg, pki.root.publicKey()), VerifyResult::accept);
        ASSERT_EQ(decodeSigned(encodeSigned(msg)), msg);
    }
}

TEST(Trust, EverySingleBitTamperOfCamIsRejected) {
    Pki pki;
    const auto hsm = pki.station(10, kVehicle);
    const auto msg = hsm.sign(encode(CamPayload{{10}, {12.5, -3, 1.5, 9.8, -0.4}, 4200}));
    ASSERT_EQ(msg.payloadBytes.size(), 53u);
    ASSERT_EQ(verify(msg, pki.root.publicKey()), VerifyResult::accept);

    std::size_t flips = 0;
    for (std::size_t byte = 0; byte < msg.payloadBytes.size(); ++byte) {
        for (int bit = 0; bit < 8; ++bit) {
            auto t = msg;
            t.payloadBytes[byte] ^= static_cast<std::uint8_t>(1U << bit);
            ASSERT_NE(verify(t, pki.root.publicKey()), VerifyResult::accept) << byte << ":" << bit;
            ++flips;
        }
    }
    for (std::size_t byte = 0; byte < msg.signature.size(); ++byte) {
        for (int bit = 0; bit < 8; ++bit) {
            auto t = msg;
            t.signature[byte] ^= static_cast<std::uint8_t>(1U << bit);
            ASSERT_NE(verify(t, pki.root.publicKey()), VerifyResult::accept) << byte << ":" << bit;
            ++flips;
        }
    }
    EXPECT_EQ(flips, (53u + 64u) * 8u);
}

TEST(Trust, EverySingleBitTamperOfSerializedEnvelopeIsRejected) {
    Pki pki;
    const auto hsm = pki.station(11, kVehicle);
    const auto bytes = encodeSigned(hsm.sign(encode(CamPayload{{11}, {1, 2, 3, 4, 0}, 7})));
    for (std::size_t byte = 0; byte < bytes.size(); ++byte) {
        for (int bit = 0; bit < 8; ++bit) {
            auto t = bytes;
            t[byte] ^= static_cast<std::uint8_t>(1U << bit);
            bool accepted = false;
            try {
                accepted = verify(decodeSigned(t), pki.root.publicKey()) == VerifyResult::accept;
            } catch (const MalformedMessage&) {
            }
            ASSERT_FALSE(accepted) << byte << ":" << bit;
        }
    }
}

TEST(Trust, VehicleCertificateCannotSignSpat) {
    Pki pki;
    const auto hsm = pki.station(12, kVehicle);
    PayloadGen gen(3);
    for (int i = 0; i < 200; ++i) {
        const auto msg = hsm.sign(encode(gen.spat()));
        ASSERT_EQ(verify(msg, pki.root.publicKey()), VerifyResult::permissionDenied);
    }
}

TEST(Trust, CpmWithoutPermissionIsDenied) {
    Pki pki;
    const auto hsm = pki.station(13, PermissionSet{Permission::sendCam});
    const auto msg = hsm.sign(encode(CpmPayload{{13}, {0, 0, 0, 50, 1.0}, {}, 1}));
    EXPECT_EQ(verify(msg, pki.root.publicKey()), VerifyResult::permissionDenied);
}

TEST(Trust, HsmIsContentBlind) {
    // a moving vehicle advertising speed 0 still produces a valid signature
    Pki pki;
    const auto hsm = pki.station(14, kVehicle);
    const auto msg = hsm.sign(encode(CamPayload{{14}, {0, -20, 1.57, 0.0, 0}, 5000}));
    EXPECT_EQ(verify(msg, pki.root.publicKey()), VerifyResult::accept);
}

TEST(Trust, PurgeStopsSigningButOldMessagesVerify) {
    Pki pki;
    auto hsm = pki.station(15, kVehicle);
    const auto before = hsm.sign(encode(CamPayload{{15}, {}, 1}));
    hsm.purgeKeys();
    EXPECT_TRUE(hsm.purged());
    EXPECT_FALSE(hsm.certificate().has_value());
    EXPECT_THROW(hsm.sign(encode(CamPayload{{15}, {}, 2})), KeysPurged);
    EXPECT_THROW(hsm.sign(Bytes{1, 2, 3}), KeysPurged);
    EXPECT_EQ(verify(before, pki.root.publicKey()), VerifyResult::accept);
}

TEST(Trust, ForeignRootBreaksChain) {
    Pki pki;
    const auto hsm = pki.station(16, kVehicle);
    const auto msg = hsm.sign(encode(CamPayload{{16}, {}, 1}));
    const auto other = KeyPair::derive(2, "root");
    EXPECT_EQ(verify(msg, other.publicKey()), VerifyResult::badChain);
}

TEST(Trust, SelfIssuedCertificateBreaksChain) {
    Pki pki;
    const auto keys = KeyPair::derive(5, "rogue");
    CertificateAuthority rogue(keys);
    const auto cert = rogue.issue({17}, keys.publicKey(), PermissionSet::all());
    const Hsm hsm(keys, cert);
    EXPECT_EQ(verify(hsm.sign(encode(CamPayload{{17}, {}, 1})), pki.root.publicKey()), VerifyResult::badChain);
}

TEST(Trust, IntermediateCannotWidenPermissions) {
    Pki pki;
    const auto caKeys = KeyPair::derive(1, "narrow-ca");
    CertificateAuthority narrow(caKeys, pki.root.issue({0xFFFF0002}, caKeys.publicKey(), kVehicle));
    const auto keys = KeyPair::derive(1, "station-18");
    const Hsm hsm(keys, narrow.issue({18}, keys.publicKey(), PermissionSet::all()), narrow.certificate());
    EXPECT_EQ(verify(hsm.sign(encode(CamPayload{{18}, {}, 1})), pki.root.publicKey()), VerifyResult::badChain);
}

TEST(Trust, KeyDerivationIsDeterministic) {
    EXPECT_EQ(KeyPair::derive(9, "a").publicKey(), KeyPair::derive(9, "a").publicKey());
    EXPECT_NE(KeyPair::derive(9, "a").publicKey(), KeyPair::derive(9, "b").publicKey());
    EXPECT_NE(KeyPair::derive(9, "a").publicKey(), KeyPair::derive(10, "a").publicKey());
    const auto k = KeyPair::derive(9, "a");
    const Bytes m{1, 2, 3};
    EXPECT_EQ(k.sign(m), k.sign(m));
    EXPECT_TRUE(verifySignature(k.publicKey(), m, k.sign(m)));
}

TEST(Trust, VerifierCachesByDigest) {
    Pki pki;
    const auto hsm = pki.station(19, kVehicle);
    const Verifier v(pki.root.publicKey());
    const auto msg = hsm.sign(encode(CamPayload{{19}, {}, 1}));
    EXPECT_EQ(v(msg), VerifyResult::accept);
    EXPECT_EQ(v(msg), VerifyResult::accept);
    auto bad = msg;
    bad.signature[0] ^= 1;
    EXPECT_EQ(v(bad), VerifyResult::badSignature);
}

TEST(Trust, Sha256KnownAnswer) {
    const std::string abc = "abc";
    const auto d = sha256(ByteView(reinterpret_cast<const std::uint8_t*>(abc.data()), abc.size()));
    EXPECT_EQ(toHex(d), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Trust, CertificateCodecTruncations) {
    Pki pki;
    const auto cert = *pki.pca.certificate();
    const auto bytes = encodeCertificate(cert);
    EXPECT_EQ(decodeCertificate(bytes), cert);
    for (std::size_t n = 0; n < bytes.size(); ++n) {
        ASSERT_THROW(decodeCertificate(ByteView(bytes.data(), n)), MalformedMessage);
    }
}
