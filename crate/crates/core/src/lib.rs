pub mod error;
pub mod dynamics;
pub mod mateq;
pub mod gaussmix;
pub mod phd;
pub mod rfscost;
pub mod ilqr;
pub mod sparselqr;
pub mod sim;
