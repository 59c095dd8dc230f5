pub mod hp;
