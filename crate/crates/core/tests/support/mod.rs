#![allow(dead_code)]

pub mod decode_sim;
pub mod pages;
pub mod ted_oracle;
