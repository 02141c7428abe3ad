pub mod apifuzz;
