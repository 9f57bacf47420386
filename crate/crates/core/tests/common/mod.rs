#![allow(dead_code)]

pub mod qp_oracle;
pub mod series;
pub mod sparse;
