//! Verifiable sealed-bid multi-attribute reverse auctions over Paillier encryption.
//!
//! Bidders submit encrypted attribute values and an encrypted score to a
//! hash-chained bulletin board. After the deadline the auctioneer posts test
//! sets, range proofs and inequality proofs so anyone holding the board can
//! confirm the winner without learning losing bids.

pub mod bench;
pub mod bulletin;
pub mod codec;
pub mod identity;
pub mod paillier;
pub mod protocol;
pub mod rangeproof;
pub mod scoring;
